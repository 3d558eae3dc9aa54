"""Outer alternating loop interleaving eigensystem refreshes with per-view sparse
solves, plus model assembly (orthonormalization, centroids, serialization)."""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .data import COVARIATE, DataError, MultiViewDataset, build_normalized_laplacian
from .gev import (
    coefficient_factor,
    factor_top_eigpairs,
    random_orthonormal_init,
    sign_align,
    whitened_lda_init,
)
from .scatter import ScatterSet, build_scatter_set
from .solvers import (
    LaplacianSolveCache,
    SparseSubproblem,
    selected_rows,
    solve_rows_sida,
    solve_view_sidanet,
)

METHOD_SIDA = "sida"
METHOD_SIDANET = "sidanet"
METHOD_COVARIATE = "covariate"

DEGENERATE_REL_TOL = 1e-10


def gram_schmidt(G):
    """Modified Gram-Schmidt with column pivoting by norm.

    Columns keep their positions; processing order is by decreasing current
    norm (ties toward the lower index). Columns whose remaining norm falls
    below 1e-12 are left exactly zero.
    """
    Q = np.array(G, dtype=float, copy=True)
    remaining = list(range(Q.shape[1]))
    while remaining:
        norms = [np.linalg.norm(Q[:, j]) for j in remaining]
        best = int(np.argmax(norms))
        j = remaining.pop(best)
        nrm = norms[best]
        if nrm < 1e-12:
            for jj in [j] + remaining:
                Q[:, jj] = 0.0
            break
        Q[:, j] /= nrm
        for jj in remaining:
            Q[:, jj] -= (Q[:, j] @ Q[:, jj]) * Q[:, j]
    return Q


def resolve_methods(ds: MultiViewDataset, graphs, methods=None):
    """Per-view solver choice: covariate views pass through, graph views smooth."""
    D = ds.n_views
    if graphs is None:
        graphs = [None] * D
    if len(graphs) != D:
        raise DataError("need one graph slot per view (None where absent)")
    if methods is None:
        methods = [
            METHOD_COVARIATE if ds.roles[d] == COVARIATE
            else (METHOD_SIDANET if graphs[d] is not None else METHOD_SIDA)
            for d in range(D)
        ]
    methods = [m.lower() for m in methods]
    if len(methods) != D:
        raise DataError("need one method per view")
    for d, m in enumerate(methods):
        if m not in (METHOD_SIDA, METHOD_SIDANET, METHOD_COVARIATE):
            raise DataError(f"unknown method {m!r} for view {d + 1}")
        if m == METHOD_SIDANET and graphs[d] is None:
            raise DataError(f"view {d + 1} uses the smoothed solver but has no graph")
        if ds.roles[d] == COVARIATE and m != METHOD_COVARIATE:
            raise DataError(f"view {d + 1} has the covariate role; method must be covariate")
        if m == METHOD_COVARIATE and ds.roles[d] != COVARIATE:
            raise DataError(f"view {d + 1} is penalized; covariate method not allowed")
    return methods, graphs


@dataclass
class DiscriminantModel:
    """Fitted sparse discriminant model.

    gammas : per-view p_d x r discriminant matrices (orthonormal nonzero columns).
    lambdas : per-view eigenvalues at the final sweep.
    selected : per-view 0-based indices of nonzero rows.
    centroids_pooled : K x (D r) class means of the concatenated training scores.
    centroids_view : per-view K x r class means of that view's training scores.
    stats : per-view (mean, sd) standardization parameters from training.
    config : fitting configuration (methods, taus, rho, eta, ridge, seed, ...).
    """

    gammas: list
    lambdas: list
    selected: list
    centroids_pooled: np.ndarray
    centroids_view: list
    stats: list
    var_names: list
    config: dict
    converged: bool
    n_classes: int

    @property
    def n_views(self):
        return len(self.gammas)

    @property
    def r(self):
        return self.gammas[0].shape[1]

    def dims(self):
        return tuple(G.shape[0] for G in self.gammas)


def fit(
    ds: MultiViewDataset,
    taus,
    graphs=None,
    methods=None,
    rho=0.5,
    eta=0.5,
    gamma="auto",
    eps=1e-5,
    max_outer=50,
    init="lda",
    seed=0,
    scatter_set: ScatterSet = None,
    init_gammas=None,
    lap_caches=None,
):
    """Fit the sparse discriminant model at fixed per-view constraint radii.

    Initializes from classical LDA (or a seeded random orthonormal basis),
    then repeats per-view eigensystem refreshes followed by sparse solves
    until the sign-aligned change of the sparse iterates is below eps.
    Covariate views are forced to tau = 0 and stay dense. scatter_set,
    init_gammas and lap_caches allow a caller fitting many tau values on the
    same data (cross-validation) to reuse the tau-independent work.
    """
    if not ds.standardized:
        raise DataError("dataset must be standardized before fitting")
    D = ds.n_views
    methods, graphs = resolve_methods(ds, graphs, methods)
    taus = [float(t) for t in taus]
    if len(taus) != D:
        raise DataError("need one tau per view")
    for d in range(D):
        if methods[d] == METHOD_COVARIATE:
            taus[d] = 0.0
        elif taus[d] < 0:
            raise DataError(f"tau for view {d + 1} must be nonnegative")
    K = ds.n_classes
    r = K - 1
    scat = scatter_set if scatter_set is not None else build_scatter_set(ds, gamma)
    if lap_caches is None:
        lap_caches = {}
        for d in range(D):
            if methods[d] == METHOD_SIDANET:
                lap_caches[d] = LaplacianSolveCache(build_normalized_laplacian(graphs[d]))
    else:
        lap_caches = dict(lap_caches)
        for d in lap_caches:
            lap_caches[d].state = None

    if init_gammas is not None:
        gammas = [g.copy() for g in init_gammas]
    elif init == "lda":
        gammas = whitened_lda_init(scat, r)
    elif init == "random":
        gammas = random_orthonormal_init(scat, r, seed)
    else:
        raise DataError(f"unknown init {init!r}")

    lambdas = [np.zeros(r) for _ in range(D)]
    converged = False
    it = 0
    for it in range(1, max_outer + 1):
        step = 0.0
        for d in range(D):
            F = coefficient_factor(d, scat, gammas, rho)
            G_tilde, lam = factor_top_eigpairs(F, r)
            D_mat = F @ (F.T @ G_tilde)
            keep = lam > DEGENERATE_REL_TOL * max(lam.max(), 1e-300)
            new = np.zeros_like(G_tilde)
            if methods[d] == METHOD_COVARIATE or taus[d] == 0.0:
                new[:, keep] = G_tilde[:, keep]
            elif methods[d] == METHOD_SIDA:
                new[:, keep] = solve_rows_sida(D_mat[:, keep], lam[keep], taus[d])
            else:
                sub = SparseSubproblem(
                    D_mat=D_mat[:, keep], lambdas=lam[keep], tau=taus[d],
                    eta=eta, laplacian=lap_caches[d].L,
                )
                new[:, keep] = solve_view_sidanet(sub, cache=lap_caches[d])
            step = max(step, np.linalg.norm(sign_align(new, gammas[d]) - gammas[d]))
            gammas[d] = new
            lambdas[d] = lam
        if step < eps:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"outer loop did not converge in {max_outer} sweeps; "
            "returning the last iterate",
            stacklevel=2,
        )

    supports = [selected_rows(g) for g in gammas]
    if all(len(s) == 0 for s in supports):
        raise DataError("tau too large: all views shrank to zero")
    final = []
    for d in range(D):
        if len(supports[d]) == 0:
            warnings.warn(f"view {d + 1} shrank to zero at tau={taus[d]:.6g}", stacklevel=2)
            final.append(np.zeros_like(gammas[d]))
            continue
        Q = gram_schmidt(gammas[d])
        outside = np.setdiff1d(np.arange(Q.shape[0]), supports[d])
        Q[outside] = 0.0  # selection support is frozen before orthonormalization
        final.append(Q)

    scores = [ds.views[d] @ final[d] for d in range(D)]
    pooled = np.hstack(scores)
    centroids_pooled = np.vstack(
        [pooled[ds.labels == k].mean(axis=0) for k in range(1, K + 1)]
    )
    centroids_view = [
        np.vstack([scores[d][ds.labels == k].mean(axis=0) for k in range(1, K + 1)])
        for d in range(D)
    ]
    config = {
        "methods": list(methods),
        "taus": list(taus),
        "rho": float(rho),
        "eta": float(eta),
        "gamma": [float(g) for g in scat.gamma],
        "eps": float(eps),
        "max_outer": int(max_outer),
        "init": init,
        "seed": int(seed),
        "outer_iterations": int(it),
    }
    return DiscriminantModel(
        gammas=final,
        lambdas=[lam.copy() for lam in lambdas],
        selected=supports,
        centroids_pooled=centroids_pooled,
        centroids_view=centroids_view,
        stats=[(m.copy(), s.copy()) for (m, s) in ds.stats],
        var_names=[list(names) for names in ds.var_names],
        config=config,
        converged=converged,
        n_classes=K,
    )


# ---------------------------------------------------------------------------
# model serialization (single JSON document, deterministic bytes)
# ---------------------------------------------------------------------------

def _matrix_to_lists(M):
    return [[float(v) for v in row] for row in np.asarray(M)]


def model_to_dict(model: DiscriminantModel):
    return {
        "format": "sida-model-v1",
        "n_classes": model.n_classes,
        "config": model.config,
        "converged": model.converged,
        "views": [
            {
                "gamma": _matrix_to_lists(model.gammas[d]),
                "lambda": [float(v) for v in model.lambdas[d]],
                "selected": [int(i) + 1 for i in model.selected[d]],
                "centroids": _matrix_to_lists(model.centroids_view[d]),
                "mean": [float(v) for v in model.stats[d][0]],
                "sd": [float(v) for v in model.stats[d][1]],
                "var_names": list(model.var_names[d]),
            }
            for d in range(model.n_views)
        ],
        "centroids_pooled": _matrix_to_lists(model.centroids_pooled),
    }


def model_from_dict(doc):
    if doc.get("format") != "sida-model-v1":
        raise DataError("not a recognized model document")
    views = doc["views"]
    return DiscriminantModel(
        gammas=[np.array(v["gamma"], dtype=float) for v in views],
        lambdas=[np.array(v["lambda"], dtype=float) for v in views],
        selected=[np.array(v["selected"], dtype=int) - 1 for v in views],
        centroids_pooled=np.array(doc["centroids_pooled"], dtype=float),
        centroids_view=[np.array(v["centroids"], dtype=float) for v in views],
        stats=[
            (np.array(v["mean"], dtype=float), np.array(v["sd"], dtype=float))
            for v in views
        ],
        var_names=[list(v["var_names"]) for v in views],
        config=dict(doc["config"]),
        converged=bool(doc["converged"]),
        n_classes=int(doc["n_classes"]),
    )


def save_model(path, model: DiscriminantModel, manifest=None):
    doc = model_to_dict(model)
    if manifest is not None:
        doc["manifest"] = manifest
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> DiscriminantModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
