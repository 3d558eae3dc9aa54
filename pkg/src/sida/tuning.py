"""Constraint-radius grids, random/grid search, and stratified K-fold
cross-validation minimizing pooled classification error."""

import itertools
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .data import DataError, MultiViewDataset
from .fit import METHOD_COVARIATE, fit, resolve_methods
from .gev import coefficient_factor, whitened_lda_init
from .metrics import classify_pooled, error_rate
from .scatter import build_scatter_set
from .solvers import LaplacianSolveCache, infinity_row_norm


@dataclass(frozen=True)
class TuningSpec:
    """Search configuration.

    points_per_view / random_fraction default to 8 / 0.20 with two penalized
    views and 5 / 0.15 with more. Grids are log-spaced between the per-view
    bounds (see make_candidates).
    """

    mode: str = "random"
    points_per_view: int = None
    random_fraction: float = None
    folds: int = 5
    seed: int = 0
    rho: float = 0.5
    eta: float = 0.5
    spacing: str = "log"
    gamma: object = "auto"
    eps: float = 1e-5
    max_outer: int = 50

    def __post_init__(self):
        if self.mode not in ("random", "grid"):
            raise DataError(f"unknown search mode {self.mode!r}")
        if self.spacing not in ("linear", "log"):
            raise DataError(f"unknown grid spacing {self.spacing!r}")
        if self.points_per_view is not None and self.points_per_view < 2:
            raise DataError("points_per_view must be at least 2")
        if self.random_fraction is not None and not (0 < self.random_fraction <= 1):
            raise DataError("random_fraction must lie in (0, 1]")
        if self.folds < 2:
            raise DataError("need at least two folds")

    def resolved_counts(self, n_penalized):
        pts = self.points_per_view
        frac = self.random_fraction
        if pts is None:
            pts = 8 if n_penalized <= 2 else 5
        if frac is None:
            frac = 0.20 if n_penalized <= 2 else 0.15
        return pts, frac

    def with_seed(self, seed):
        return replace(self, seed=seed)


def tau_bounds(C, p, n):
    """(tau_min, tau_max) from a coefficient-side matrix: tau_max is its max
    absolute row sum and tau_min = sqrt(ln(p)/n) * tau_max, clamped to
    0.1 * tau_max (with a warning) when the formula meets or exceeds tau_max."""
    tau_max = infinity_row_norm(C)
    if tau_max == 0.0:
        return 0.0, 0.0
    tau_min = float(np.sqrt(np.log(p) / n)) * tau_max
    if tau_min >= tau_max:
        warnings.warn(
            "lower bound formula met or exceeded the upper bound; "
            "clamping tau_min to 0.1 * tau_max",
            stacklevel=2,
        )
        tau_min = 0.1 * tau_max
    return tau_min, tau_max


def view_tau_bounds(scat, gammas, lambdas, rho):
    """Per-view bounds from the trivial-solution thresholds at the nonsparse
    solution: view d's tau_max is the max absolute row sum of C_d @ Gamma_d,
    the radius at and above which the all-zero matrix is feasible."""
    bounds = []
    for d in range(scat.n_views):
        F = coefficient_factor(d, scat, gammas, rho)
        target = F @ (F.T @ gammas[d])
        bounds.append(tau_bounds(target, scat.dims[d], scat.n))
    return bounds


def make_candidates(spec: TuningSpec, bounds, penalized=None):
    """Per-view grids between the bounds, combined over penalized views.

    Covariate views are pinned at tau = 0. Grid mode returns the full product
    in lexicographic order; random mode samples ceil(fraction * total) tuples
    uniformly without replacement using the spec seed.
    """
    D = len(bounds)
    if penalized is None:
        penalized = [True] * D
    n_pen = sum(penalized)
    pts, frac = spec.resolved_counts(n_pen)
    grids = []
    for d in range(D):
        if not penalized[d]:
            grids.append(np.array([0.0]))
            continue
        lo, hi = bounds[d]
        if hi <= 0.0:
            grids.append(np.array([0.0]))
        elif spec.spacing == "log" and lo > 0.0:
            grids.append(np.geomspace(lo, hi, pts))
        else:
            grids.append(np.linspace(lo, hi, pts))
    all_tuples = [tuple(float(v) for v in t) for t in itertools.product(*grids)]
    if spec.mode == "grid":
        return all_tuples
    total = len(all_tuples)
    n_take = int(np.ceil(frac * total))
    rng = np.random.default_rng(spec.seed)
    idx = np.sort(rng.choice(total, size=n_take, replace=False))
    return [all_tuples[i] for i in idx]


def stratified_folds(labels, folds, seed):
    """Fold assignment vector; per class the fold sizes differ by at most one."""
    counts = np.bincount(labels)[1:]
    if folds > counts.min():
        raise DataError(
            f"{folds} folds but the smallest class has only {counts.min()} samples"
        )
    rng = np.random.default_rng(seed)
    fold_of = np.zeros(len(labels), dtype=int)
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        idx = idx[rng.permutation(len(idx))]
        for f in range(folds):
            fold_of[idx[f::folds]] = f
    return fold_of


@dataclass
class CvResult:
    """Search outcome: the evaluated tau tuples with mean errors and mean
    nonzero counts, the winning tuple, and the full per-fold error table."""

    candidates: list
    mean_errors: np.ndarray
    mean_nonzeros: np.ndarray
    best: tuple
    fold_errors: np.ndarray
    bounds: list

    def best_index(self):
        return self.candidates.index(self.best)


def _subset_dataset(ds, mask):
    return MultiViewDataset(
        views=tuple(X[mask] for X in ds.views),
        labels=ds.labels[mask],
        roles=ds.roles,
        standardized=True,
        stats=ds.stats,
        var_names=ds.var_names,
    )


def _evaluate_fold(ds, graphs, methods, spec, candidates, fold_of, f):
    """Errors and nonzero counts of every candidate on one held-out fold.

    A fit whose penalized view shrinks entirely to zero cannot use that view
    for prediction; such folds score as complete misclassification so the
    search avoids radii that disable a view.
    """
    train = fold_of != f
    test = ~train
    ds_tr = _subset_dataset(ds, train)
    scat = build_scatter_set(ds_tr, spec.gamma)
    r = ds.n_classes - 1
    init = whitened_lda_init(scat, r)
    caches = {}
    for d, m in enumerate(methods):
        if m == "sidanet":
            from .data import build_normalized_laplacian

            caches[d] = LaplacianSolveCache(build_normalized_laplacian(graphs[d]))
    test_views = [X[test] for X in ds.views]
    y_test = ds.labels[test]
    errs = np.zeros(len(candidates))
    nnz = np.zeros((len(candidates), ds.n_views))
    for ci, taus in enumerate(candidates):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit(
                    ds_tr, taus=taus, graphs=graphs, methods=methods,
                    rho=spec.rho, eta=spec.eta, gamma=spec.gamma,
                    eps=spec.eps, max_outer=spec.max_outer,
                    scatter_set=scat, init_gammas=init, lap_caches=caches,
                )
        except DataError:
            errs[ci] = 1.0
            continue
        nnz[ci] = [len(s) for s in model.selected]
        degenerate = any(
            len(model.selected[d]) == 0
            for d in range(ds.n_views)
            if methods[d] != METHOD_COVARIATE
        )
        if degenerate:
            errs[ci] = 1.0
            continue
        pred = classify_pooled(test_views, model)
        errs[ci] = error_rate(pred, y_test)
    return errs, nnz


def cross_validate(ds: MultiViewDataset, graphs=None, spec: TuningSpec = None,
                   methods=None, workers=1):
    """Pick the constraint radii minimizing mean held-out pooled error.

    Bounds come from the full-data nonsparse solution; candidates whose radius
    reaches a view's trivial-solution threshold are skipped (their fit is the
    zero matrix by construction). Ties break toward the largest radius sum
    (the sparser model), then lexicographically.
    """
    if spec is None:
        spec = TuningSpec()
    if not ds.standardized:
        raise DataError("dataset must be standardized before tuning")
    methods, graphs = resolve_methods(ds, graphs, methods)
    penalized = [m != METHOD_COVARIATE for m in methods]
    scat = build_scatter_set(ds, spec.gamma)
    r = ds.n_classes - 1
    init = whitened_lda_init(scat, r)
    from .gev import solve_gev

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve_gev(scat, rho=spec.rho, r=r)
    bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, spec.rho)
    candidates = make_candidates(spec, bounds, penalized)
    usable = [
        t for t in candidates
        if all(t[d] < bounds[d][1] for d in range(ds.n_views) if penalized[d])
    ]
    if usable:
        candidates = usable
    fold_of = stratified_folds(ds.labels, spec.folds, spec.seed)

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [
                ex.submit(
                    _evaluate_fold, ds, graphs, methods, spec, candidates, fold_of, f
                )
                for f in range(spec.folds)
            ]
            per_fold = [fut.result() for fut in futures]
    else:
        per_fold = [
            _evaluate_fold(ds, graphs, methods, spec, candidates, fold_of, f)
            for f in range(spec.folds)
        ]
    fold_errors = np.stack([pf[0] for pf in per_fold], axis=1)
    nonzeros = np.mean([pf[1] for pf in per_fold], axis=0)
    mean_errors = fold_errors.mean(axis=1)
    sums = np.array([sum(t) for t in candidates])
    order = np.lexsort((list(range(len(candidates))), -sums, mean_errors))
    best = candidates[int(order[0])]
    return CvResult(
        candidates=candidates,
        mean_errors=mean_errors,
        mean_nonzeros=nonzeros,
        best=tuple(best),
        fold_errors=fold_errors,
        bounds=bounds,
    )


def cv_report_rows(result: CvResult):
    """Rows for the CSV report: tau_1..tau_D, fold, error, nonzeros_1..nonzeros_D."""
    D = len(result.candidates[0])
    header = (
        [f"tau_{d + 1}" for d in range(D)]
        + ["fold", "error"]
        + [f"nonzeros_{d + 1}" for d in range(D)]
    )
    rows = []
    for ci, taus in enumerate(result.candidates):
        for f in range(result.fold_errors.shape[1]):
            rows.append(
                [f"{t:.17g}" for t in taus]
                + [str(f + 1), f"{result.fold_errors[ci, f]:.17g}"]
                + [f"{v:.17g}" for v in result.mean_nonzeros[ci]]
            )
    return header, rows
