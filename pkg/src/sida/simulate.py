"""Deterministic synthetic-data generators: block-structured joint covariances
with controlled cross-view canonical correlations, class-mean separation, and
(for the network scenarios) per-view variable graphs with known signal sets."""

from dataclasses import dataclass, field

import numpy as np

from .data import DataError, MultiViewDataset, ViewGraph, make_dataset

S_SCENARIOS = ("S1", "S2", "S3")
NET_SCENARIOS = ("NET1", "NET2")

# (rho1, rho2, c) presets; the binary scenario uses c = 0.25 in its strongest setting
SETTINGS = {
    ("S1", 1): (0.9, 0.7, 0.5),
    ("S1", 2): (0.4, 0.2, 0.2),
    ("S1", 3): (0.15, 0.05, 0.12),
    ("S2", 1): (0.9, 0.7, 0.5),
    ("S2", 2): (0.4, 0.2, 0.2),
    ("S2", 3): (0.15, 0.05, 0.12),
    ("S3", 1): (0.9, 0.7, 0.25),
    ("S3", 2): (0.4, 0.2, 0.2),
    ("S3", 3): (0.15, 0.05, 0.12),
    ("NET1", 1): (0.9, 0.7, 0.2),
    ("NET2", 1): (0.9, 0.7, 0.2),
}


class GenerationError(RuntimeError):
    """Raised when a drawn covariance fails its definiteness check; retry with a new seed."""


def compound_symmetric(size, corr):
    """Unit-diagonal matrix with constant off-diagonal correlation."""
    if not -1.0 < corr < 1.0:
        raise DataError("correlation must lie in (-1, 1)")
    M = np.full((size, size), float(corr))
    np.fill_diagonal(M, 1.0)
    return M


def ar1(size, base):
    """Unit-diagonal matrix with entries base**|i-j|."""
    if not -1.0 < base < 1.0:
        raise DataError("base must lie in (-1, 1)")
    idx = np.arange(size)
    return base ** np.abs(idx[:, None] - idx[None, :])


def network_block():
    """One 10-variable network block: the hub row/column at correlation 0.7
    around a 9 x 9 compound-symmetric 0.49 core."""
    B = compound_symmetric(10, 0.49)
    B[0, 1:] = 0.7
    B[1:, 0] = 0.7
    return B


@dataclass(frozen=True)
class ScenarioSpec:
    """Synthetic-scenario description.

    scenario: S1 (shared covariance, 3 classes), S2 (class-specific within
    covariance), S3 (binary), NET1/NET2 (3 views with variable networks; all
    four or only two blocks carry signal). dims: per-view variable counts
    (each at least 40). n_per_class: samples per class. rho1/rho2/c default
    to the setting presets.
    """

    scenario: str = "S1"
    setting: int = 1
    dims: tuple = (300, 300)
    n_per_class: int = 80
    seed: int = 0
    rho1: float = None
    rho2: float = None
    c: float = None

    def __post_init__(self):
        if self.scenario not in S_SCENARIOS + NET_SCENARIOS:
            raise DataError(f"unknown scenario {self.scenario!r}")
        if self.scenario in S_SCENARIOS and self.setting not in (1, 2, 3):
            raise DataError("setting must be 1, 2, or 3")
        D = 3 if self.scenario in NET_SCENARIOS else 2
        if len(self.dims) != D:
            raise DataError(f"{self.scenario} needs {D} view dimensions")
        if any(p < 40 for p in self.dims):
            raise DataError("each view needs at least 40 variables")
        if self.n_per_class < 2:
            raise DataError("need at least two samples per class")

    @property
    def n_views(self):
        return len(self.dims)

    @property
    def n_classes(self):
        return 2 if self.scenario == "S3" else 3

    def params(self):
        key = (self.scenario, self.setting if self.scenario in S_SCENARIOS else 1)
        r1, r2, c = SETTINGS[key]
        return (
            self.rho1 if self.rho1 is not None else r1,
            self.rho2 if self.rho2 is not None else r2,
            self.c if self.c is not None else c,
        )

    def signal_size(self):
        return 40 if self.scenario == "NET1" else 20


@dataclass
class GeneratedData:
    """A matched train/test draw with the generating ground truth."""

    train: MultiViewDataset
    test: MultiViewDataset
    truth: list  # per-view 1-based signal indices
    graphs: list  # per-view ViewGraph, or None for the no-network scenarios
    population: dict = field(default_factory=dict)


def _within_covariance(spec: ScenarioSpec, p):
    sig = np.eye(p)
    if spec.scenario in NET_SCENARIOS:
        for b in range(4):
            sig[b * 10:(b + 1) * 10, b * 10:(b + 1) * 10] = network_block()
    else:
        sig[:10, :10] = compound_symmetric(10, 0.7)
        sig[10:20, 10:20] = compound_symmetric(10, 0.7)
    return sig


def _normalize_loading(V, Sig):
    """Rescale V so V^T Sig V = I via the symmetric inverse square root of the Gram."""
    G = V.T @ Sig @ V
    w, U = np.linalg.eigh(G)
    if w.min() <= 0:
        raise GenerationError("loading Gram matrix is singular; retry with a new seed")
    return V @ ((U / np.sqrt(w)) @ U.T)


def _raw_loadings(spec: ScenarioSpec, rng):
    """Per-view loading matrices before normalization: U(0.5, 1) entries on the
    signal rows, hub rows scaled by 10 in the network scenarios."""
    nsig = spec.signal_size()
    out = []
    for p in spec.dims:
        V = np.zeros((p, 2))
        V[:nsig] = rng.uniform(0.5, 1.0, size=(nsig, 2))
        if spec.scenario in NET_SCENARIOS:
            for hub in range(0, nsig, 10):
                V[hub] *= 10.0
        out.append(V)
    return out


def build_joint_covariance(spec: ScenarioSpec, rng=None, raw_loadings=None,
                           within=None):
    """Joint covariance over all views: within-view blocks per scenario and
    cross blocks Sig_d V_d diag(rho1, rho2) V_j^T Sig_j with the loadings
    normalized against the given within-view matrices.

    Returns (joint, normalized loadings). Raises GenerationError when the
    assembled matrix is not positive definite.
    """
    if raw_loadings is None:
        if rng is None:
            rng = np.random.default_rng(spec.seed)
        raw_loadings = _raw_loadings(spec, rng)
    if within is None:
        within = [_within_covariance(spec, p) for p in spec.dims]
    rho1, rho2, _ = spec.params()
    Dmat = np.diag([rho1, rho2])
    V = [_normalize_loading(raw_loadings[d], within[d]) for d in range(spec.n_views)]
    P = sum(spec.dims)
    joint = np.zeros((P, P))
    offs = np.concatenate([[0], np.cumsum(spec.dims)])
    for d in range(spec.n_views):
        joint[offs[d]:offs[d + 1], offs[d]:offs[d + 1]] = within[d]
        for j in range(d + 1, spec.n_views):
            cross = within[d] @ V[d] @ Dmat @ V[j].T @ within[j]
            joint[offs[d]:offs[d + 1], offs[j]:offs[j + 1]] = cross
            joint[offs[j]:offs[j + 1], offs[d]:offs[d + 1]] = cross.T
    wmin = np.linalg.eigvalsh(joint).min()
    if wmin <= 1e-10:
        raise GenerationError(
            f"joint covariance is not positive definite (min eig {wmin:.3e}); "
            "retry with a new seed"
        )
    return joint, V


def _mean_matrix(spec: ScenarioSpec, joint):
    """Class means as the columns of [joint @ A, 0]."""
    P = joint.shape[0]
    offs = np.concatenate([[0], np.cumsum(spec.dims)])
    _, _, c = spec.params()
    if spec.scenario == "S3":
        A = np.zeros((P, 1))
        for d in range(spec.n_views):
            A[offs[d]:offs[d] + 20, 0] = c
    elif spec.scenario == "NET1":
        # all four blocks separate classes: first two on the first direction,
        # the last two (negatively) on the second
        A = np.zeros((P, 2))
        for d in range(spec.n_views):
            A[offs[d]:offs[d] + 20, 0] = c
            A[offs[d] + 20:offs[d] + 40, 1] = -c
    else:
        A = np.zeros((P, 2))
        for d in range(spec.n_views):
            A[offs[d]:offs[d] + 10, 0] = c
            A[offs[d] + 10:offs[d] + 20, 1] = -c
    mus = joint @ A
    return np.hstack([mus, np.zeros((P, 1))])[:, : spec.n_classes]


def star_graphs(spec: ScenarioSpec):
    """Unit-weight star per 10-variable block (hub first), four blocks per view."""
    graphs = []
    for d, p in enumerate(spec.dims):
        edges = []
        for b in range(4):
            hub = b * 10 + 1
            edges += [(hub, hub + s, 1.0) for s in range(1, 10)]
        graphs.append(ViewGraph(p=p, edges=tuple(edges), view_index=d))
    return graphs


def generate(spec: ScenarioSpec) -> GeneratedData:
    """Draw matched train and test sets (fresh test draws, same spec and seed
    stream) plus ground truth and, for the network scenarios, the view graphs."""
    rng = np.random.default_rng(spec.seed)
    raw = _raw_loadings(spec, rng)
    within = [_within_covariance(spec, p) for p in spec.dims]
    joint, V = build_joint_covariance(spec, raw_loadings=raw, within=within)
    mus = _mean_matrix(spec, joint)
    K = spec.n_classes

    if spec.scenario == "S2":
        # class-specific within covariance; the cross construction is repeated
        # per class with the loadings renormalized against that class's within
        # matrices so every class covariance stays positive definite
        class_within = {
            1: within,
            2: [ar1(p, 0.6) for p in spec.dims],
            3: [np.eye(p) for p in spec.dims],
        }
        chols = []
        for k in range(1, K + 1):
            joint_k, _ = build_joint_covariance(
                spec, raw_loadings=raw, within=class_within[k]
            )
            chols.append(np.linalg.cholesky(joint_k))
    else:
        chols = [np.linalg.cholesky(joint)] * K

    offs = np.concatenate([[0], np.cumsum(spec.dims)])

    def draw_once():
        rows, labels = [], []
        for k in range(1, K + 1):
            Z = rng.standard_normal((spec.n_per_class, joint.shape[0]))
            rows.append(Z @ chols[k - 1].T + mus[:, k - 1])
            labels += [k] * spec.n_per_class
        X = np.vstack(rows)
        views = [X[:, offs[d]:offs[d + 1]].copy() for d in range(spec.n_views)]
        return make_dataset(views, np.array(labels))

    train = draw_once()
    test = draw_once()
    nsig = spec.signal_size()
    truth = [np.arange(1, nsig + 1) for _ in range(spec.n_views)]
    graphs = star_graphs(spec) if spec.scenario in NET_SCENARIOS else None
    return GeneratedData(
        train=train, test=test, truth=truth, graphs=graphs,
        population={"joint": joint, "loadings": V, "means": mus},
    )
