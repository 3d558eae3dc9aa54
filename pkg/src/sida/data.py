"""Core data records: multi-view datasets, variable graphs, Laplacians, and file ingestion."""

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

PENALIZED = "penalized"
COVARIATE = "covariate"


class DataError(ValueError):
    """Raised for malformed inputs: bad files, inconsistent shapes, invalid labels."""


@dataclass(frozen=True)
class MultiViewDataset:
    """D sample-aligned data matrices with shared class labels.

    views : list of (n, p_d) float arrays, one per view.
    labels : (n,) int array with classes 1..K, every class present.
    roles : per-view 'penalized' or 'covariate'; at most one covariate, last.
    standardized : whether columns are mean 0 / sd 1 (sd denominator n-1).
    stats : per view, (mean, sd) pairs captured at standardization time;
        constant columns carry the sd sentinel 0.
    """

    views: tuple
    labels: np.ndarray
    roles: tuple
    standardized: bool = False
    stats: tuple = ()
    var_names: tuple = ()

    def __post_init__(self):
        if not self.views:
            raise DataError("at least one view required")
        n = self.views[0].shape[0]
        for d, X in enumerate(self.views):
            if X.ndim != 2:
                raise DataError(f"view {d + 1} is not a matrix")
            if X.shape[0] != n:
                raise DataError(
                    f"view {d + 1} has {X.shape[0]} rows, expected {n} (views must be sample-aligned)"
                )
        if self.labels.shape != (n,):
            raise DataError(f"labels must have length {n}, got {self.labels.shape}")
        ks = np.unique(self.labels)
        if len(ks) < 2:
            raise DataError("need at least two classes")
        if not np.array_equal(ks, np.arange(1, len(ks) + 1)):
            raise DataError("labels must be 1..K with every class present")
        if len(self.roles) != len(self.views):
            raise DataError("one role per view required")
        for role in self.roles:
            if role not in (PENALIZED, COVARIATE):
                raise DataError(f"unknown role {role!r}")
        n_cov = sum(r == COVARIATE for r in self.roles)
        if n_cov > 1:
            raise DataError("at most one covariate view is supported")
        if n_cov == 1 and self.roles[-1] != COVARIATE:
            raise DataError("the covariate view must be the last view")

    @property
    def n_views(self):
        return len(self.views)

    @property
    def n_samples(self):
        return self.views[0].shape[0]

    @property
    def n_classes(self):
        return int(self.labels.max())

    @property
    def dims(self):
        return tuple(X.shape[1] for X in self.views)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]


def make_dataset(views, labels, roles=None, var_names=None):
    """Assemble a MultiViewDataset from raw arrays, validating invariants."""
    views = tuple(np.ascontiguousarray(np.asarray(X, dtype=float)) for X in views)
    labels = np.asarray(labels, dtype=int)
    if roles is None:
        roles = (PENALIZED,) * len(views)
    if var_names is None:
        var_names = tuple(
            tuple(f"v{d + 1}_{j + 1}" for j in range(X.shape[1]))
            for d, X in enumerate(views)
        )
    else:
        var_names = tuple(tuple(names) for names in var_names)
    return MultiViewDataset(
        views=views, labels=labels, roles=tuple(roles), var_names=var_names
    )


# ---------------------------------------------------------------------------
# standardization and encoding
# ---------------------------------------------------------------------------

def column_stats(X):
    """Per-column mean and sd (denominator n-1); constant columns get sd sentinel 0."""
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    sd = np.where(sd < 1e-300, 0.0, sd)
    return mean, sd


def apply_stats(X, stats):
    """Center/scale X with previously captured (mean, sd); sentinel-0 sd columns are centered only."""
    mean, sd = stats
    if X.shape[1] != mean.shape[0]:
        raise DataError(
            f"matrix has {X.shape[1]} columns but stats describe {mean.shape[0]}"
        )
    denom = np.where(sd == 0.0, 1.0, sd)
    return (X - mean) / denom


def standardize(ds: MultiViewDataset) -> MultiViewDataset:
    """Center every column to mean 0 and scale to sd 1 (n-1 denominator).

    Constant columns are centered only and their sd sentinel 0 recorded, with a
    warning; dropping them would desynchronize graph vertex indices.
    """
    if ds.standardized:
        raise DataError("dataset is already standardized")
    new_views, all_stats = [], []
    for d, X in enumerate(ds.views):
        stats = column_stats(X)
        n_const = int((stats[1] == 0.0).sum())
        if n_const:
            warnings.warn(
                f"view {d + 1}: {n_const} constant column(s) centered but not scaled",
                stacklevel=2,
            )
        new_views.append(apply_stats(X, stats))
        all_stats.append((stats[0].copy(), stats[1].copy()))
    return replace(
        ds, views=tuple(new_views), standardized=True, stats=tuple(all_stats)
    )


def standardize_with(ds: MultiViewDataset, stats) -> MultiViewDataset:
    """Standardize a raw dataset with previously captured per-view stats
    (training statistics are reused for test data to avoid leakage)."""
    if ds.standardized:
        raise DataError("dataset is already standardized")
    views = tuple(apply_stats(X, stats[d]) for d, X in enumerate(ds.views))
    return replace(ds, views=views, standardized=True, stats=tuple(stats))


def encode_categorical(column, levels):
    """Reference-coded indicator matrix for a categorical column.

    The first level is the reference; each remaining level gets one 0/1
    column, so binary factors become a single indicator.
    """
    levels = list(levels)
    if len(levels) < 2:
        raise DataError("need at least two levels")
    index = {lev: i for i, lev in enumerate(levels)}
    column = list(column)
    out = np.zeros((len(column), len(levels) - 1))
    for i, val in enumerate(column):
        if val not in index:
            raise DataError(f"unseen level {val!r} (known levels: {levels})")
        j = index[val]
        if j > 0:
            out[i, j - 1] = 1.0
    return out


# ---------------------------------------------------------------------------
# file ingestion (views, labels, edge lists)
# ---------------------------------------------------------------------------

def _parse_cell(text, row, col, path):
    try:
        return float(text)
    except ValueError:
        raise DataError(
            f"{path}: non-numeric value {text.strip()!r} at row {row}, column {col}"
            " (missing values are not supported)"
        ) from None


def load_view_csv(path):
    """Read a view matrix: one header row of variable names, then numeric rows.

    Returns (matrix, names). Ragged or non-numeric rows raise DataError with
    the offending coordinates.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh]
    lines = [ln for ln in lines if ln.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty file")
    names = [c.strip() for c in lines[0].split(",")]
    p = len(names)
    rows = []
    for r, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != p:
            raise DataError(
                f"{path}: row {r} has {len(cells)} fields, expected {p}"
            )
        rows.append([_parse_cell(c, r, j + 1, path) for j, c in enumerate(cells)])
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float), names


def save_matrix_csv(path, X, names=None):
    """Write a matrix with a header row, 17 significant digits per entry."""
    X = np.asarray(X, dtype=float)
    if names is None:
        names = [f"x{j + 1}" for j in range(X.shape[1])]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row in X:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_labels_csv(path):
    """Read class labels: a single integer column, classes 1..K, optional header."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty labels file")
    start = 0
    try:
        int(lines[0])
    except ValueError:
        start = 1  # header row
    labels = []
    for r, ln in enumerate(lines[start:], start=start + 1):
        try:
            labels.append(int(ln))
        except ValueError:
            raise DataError(f"{path}: non-integer label {ln!r} at row {r}") from None
    return np.array(labels, dtype=int)


def save_labels_csv(path, labels, header="label"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in labels:
            fh.write(f"{int(v)}\n")


# ---------------------------------------------------------------------------
# variable graphs and Laplacians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ViewGraph:
    """Weighted undirected variable-variable graph for one view.

    edges : tuple of (u, v, w) with 1-based vertex indices, u != v, w >= 0;
        each undirected edge stored once.
    p : vertex count (number of variables in the view).
    """

    p: int
    edges: tuple
    view_index: int = 0

    def __post_init__(self):
        seen = set()
        for u, v, w in self.edges:
            if not (1 <= u <= self.p and 1 <= v <= self.p):
                raise DataError(f"edge ({u},{v}) out of range 1..{self.p}")
            if u == v:
                raise DataError(f"self-loop at vertex {u} is not allowed")
            if w < 0:
                raise DataError(f"negative weight on edge ({u},{v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DataError(f"duplicate edge ({u},{v})")
            seen.add(key)

    def weighted_degrees(self):
        r = np.zeros(self.p)
        for u, v, w in self.edges:
            r[u - 1] += w
            r[v - 1] += w
        return r


def empty_graph(p, view_index=0):
    return ViewGraph(p=p, edges=(), view_index=view_index)


def load_edge_list(path, p, view_index=0):
    """Read a TSV edge list: columns u, v, w (1-based indices); '#' lines ignored."""
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for r, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split("\t") if "\t" in ln else ln.split()
            if len(parts) != 3:
                raise DataError(f"{path}: row {r} needs 3 fields u, v, w")
            try:
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise DataError(f"{path}: unparseable edge at row {r}") from None
            edges.append((u, v, w))
    return ViewGraph(p=p, edges=tuple(edges), view_index=view_index)


def save_edge_list(path, graph: ViewGraph):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# u\tv\tw\n")
        for u, v, w in graph.edges:
            fh.write(f"{u}\t{v}\t{w:.17g}\n")


def build_normalized_laplacian(g: ViewGraph, normalized=True):
    """Sparse graph Laplacian of a view graph.

    Normalized (default): diagonal 1 for vertices with nonzero weighted degree,
    off-diagonal -w(u,v)/sqrt(r_u r_v) for adjacent pairs, 0 elsewhere
    (isolated vertices have zero rows). With normalized=False the plain
    Laplacian diag(r) - W is returned instead; it pushes connected variables
    toward equal coefficients rather than degree-scaled ones.
    """
    r = g.weighted_degrees()
    rows, cols, vals = [], [], []
    if normalized:
        for v in range(g.p):
            if r[v] > 0:
                rows.append(v)
                cols.append(v)
                vals.append(1.0)
        for u, v, w in g.edges:
            if w == 0:
                continue
            off = -w / np.sqrt(r[u - 1] * r[v - 1])
            rows += [u - 1, v - 1]
            cols += [v - 1, u - 1]
            vals += [off, off]
    else:
        for v in range(g.p):
            if r[v] > 0:
                rows.append(v)
                cols.append(v)
                vals.append(r[v])
        for u, v, w in g.edges:
            if w == 0:
                continue
            rows += [u - 1, v - 1]
            cols += [v - 1, u - 1]
            vals += [-w, -w]
    return sp.csr_matrix((vals, (rows, cols)), shape=(g.p, g.p))
