"""Classical LDA initialization and the alternating eigensystem solver.

Each view's coefficient matrix is C_d = c1 (M_d + M_d^T) + c2 sum_{j!=d}
(N_dj G_j G_j^T N_jd + transpose) with c1 = rho, c2 = 2(1-rho)/(D(D-1)); it is
symmetric PSD of rank at most (K-1) + (D-1) r, so eigenpairs are extracted
from the small Gram matrix of its factor instead of the dense p x p form.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .scatter import ScatterSet, regularized_inv_sqrt


def association_weight(rho, n_views):
    """c2 in the coefficient assembly: 2(1-rho)/(D(D-1)), zero for one view."""
    if n_views < 2:
        return 0.0
    return 2.0 * (1.0 - rho) / (n_views * (n_views - 1))


def fix_signs(V):
    """Make the largest-magnitude entry of each column positive (in place)."""
    if V.size == 0:
        return V
    j = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[j, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    V *= s
    return V


def sign_align(new, old):
    """Flip columns of `new` that are negatively correlated with `old`."""
    s = np.sign(np.sum(new * old, axis=0))
    s[s == 0] = 1.0
    return new * s


def coefficient_factor(d, scat: ScatterSet, gammas, rho):
    """G with C_d = G G^T, concatenating the separation and association factors."""
    c1 = rho
    c2 = association_weight(rho, scat.n_views)
    parts = [np.sqrt(2.0 * c1) * scat.B[d]] if c1 > 0 else []
    if c2 > 0:
        root = np.sqrt(2.0 * c2)
        for j in range(scat.n_views):
            if j != d:
                parts.append(root * scat.N_apply(d, j, gammas[j]))
    if not parts:
        parts = [np.zeros((scat.dims[d], 1))]
    return np.hstack(parts)


def assemble_coefficient(d, scat: ScatterSet, gammas, rho):
    """Dense coefficient matrix C_d, explicitly symmetrized."""
    G = coefficient_factor(d, scat, gammas, rho)
    C = G @ G.T
    return 0.5 * (C + C.T)


def factor_top_eigpairs(G, r):
    """Top-r eigenpairs of the PSD matrix G G^T via the Gram matrix of G.

    Returns (V, lam) with V p x r sign-fixed orthonormal columns and lam the
    (possibly zero-padded) descending eigenvalues. Eigenvalues at or below
    1e-10 * lam_max are degenerate: their eigenvectors are completed to an
    orthonormal basis deterministically.
    """
    p, m = G.shape
    gram = G.T @ G
    w, U = np.linalg.eigh(gram)
    order = np.argsort(w)[::-1]
    w = np.maximum(w[order], 0.0)
    U = U[:, order]
    lam_max = w[0] if m else 0.0
    tol = 1e-10 * max(lam_max, 1e-300)
    lam = np.zeros(r)
    V = np.zeros((p, r))
    k = 0
    for i in range(min(r, m)):
        if w[i] > tol:
            V[:, k] = G @ (U[:, i] / np.sqrt(w[i]))
            lam[k] = w[i]
            k += 1
    if k < r:
        V[:, k:] = _orthonormal_completion(V[:, :k], r - k)
    return fix_signs(V), lam


def _orthonormal_completion(V, m):
    """m deterministic orthonormal columns orthogonal to the columns of V."""
    p = V.shape[0]
    out = np.zeros((p, m))
    k = 0
    for j in range(p):
        if k == m:
            break
        e = np.zeros(p)
        e[j] = 1.0
        e -= V @ (V.T @ e)
        if k:
            e -= out[:, :k] @ (out[:, :k].T @ e)
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            out[:, k] = e / nrm
            k += 1
    if k < m:
        raise RuntimeError("could not complete orthonormal basis")
    return out


def lda_directions(Sw, Sb, r):
    """Classical LDA directions: top-r eigenvectors of Sw^(-1/2) Sb Sw^(-1/2)
    mapped back by Sw^(-1/2), columns orthonormalized.

    Sw must already be regularized SPD. If rank(Sb) < r the remaining columns
    are an arbitrary orthonormal complement and a degeneracy warning is issued.
    """
    W, _, _ = regularized_inv_sqrt(Sw, 0.0)
    Sb = np.asarray(Sb, dtype=float)
    ww, VV = np.linalg.eigh(0.5 * (Sb + Sb.T))
    keep = ww > max(ww[-1], 0) * 1e-12
    H = VV[:, keep] * np.sqrt(ww[keep])
    rank = H.shape[1]
    if rank < r:
        warnings.warn(
            f"between-class scatter has rank {rank} < {r}; remaining LDA "
            "directions are an arbitrary orthonormal complement",
            stacklevel=2,
        )
    Vw, _ = factor_top_eigpairs(W @ H, r)
    A = W @ Vw
    # re-orthonormalize in the original coordinates
    Q, _ = np.linalg.qr(A)
    return fix_signs(Q[:, :r].copy())


def whitened_lda_init(scat: ScatterSet, r):
    """Per-view top-r eigenvectors of M_d: the classical-LDA start in whitened coordinates."""
    return [factor_top_eigpairs(scat.B[d], r)[0] for d in range(scat.n_views)]


def random_orthonormal_init(scat: ScatterSet, r, seed):
    """Seeded random orthonormal start, selectable for robustness studies."""
    rng = np.random.default_rng(seed)
    out = []
    for d in range(scat.n_views):
        Q, _ = np.linalg.qr(rng.standard_normal((scat.dims[d], r)))
        out.append(fix_signs(Q[:, :r].copy()))
    return out


def gev_objective(scat: ScatterSet, gammas, rho):
    """Separation + association objective evaluated at the current directions."""
    c2 = association_weight(rho, scat.n_views)
    sep = 0.0
    for d in range(scat.n_views):
        BG = scat.B[d].T @ gammas[d]
        sep += np.sum(BG * BG)
    assoc = 0.0
    for d in range(scat.n_views):
        for j in range(d + 1, scat.n_views):
            P = gammas[d].T @ scat.N_apply(d, j, gammas[j])
            assoc += np.sum(P * P)
    return rho * sep + c2 * assoc


@dataclass
class GevSolution:
    """Nonsparse alternating-eigensystem solution.

    gammas : per-view p_d x r orthonormal eigenvector matrices.
    lambdas : per-view descending eigenvalues of the symmetrized coefficient.
    residuals : per-view ||C G - G L||_F / ||C||_F at the final iterate.
    """

    gammas: list
    lambdas: list
    iterations: int
    converged: bool
    residuals: list


def _stationarity_residuals(scat, gammas, lambdas, rho):
    res = []
    for d in range(scat.n_views):
        G = coefficient_factor(d, scat, gammas, rho)
        gram = G.T @ G
        normC = np.linalg.norm(gram)  # ||G G^T||_F = ||G^T G||_F
        R = G @ (G.T @ gammas[d]) - gammas[d] * lambdas[d]
        res.append(np.linalg.norm(R) / max(normC, 1e-300))
    return res


def solve_gev(scat: ScatterSet, rho=0.5, r=None, eps=1e-6, max_iter=200,
              init="lda", seed=0):
    """Alternating sweeps of the per-view eigensystems until the directions settle.

    Sweep order is ascending over views; convergence is the max over views of
    the sign-aligned Frobenius change, with the stationarity residuals also
    required to be below 1e-6 before stopping.
    """
    if r is None:
        r = len(scat.counts) - 1
    if init == "lda":
        gammas = whitened_lda_init(scat, r)
    elif init == "random":
        gammas = random_orthonormal_init(scat, r, seed)
    else:
        raise ValueError(f"unknown init {init!r}")
    lambdas = [np.zeros(r) for _ in range(scat.n_views)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        step = 0.0
        for d in range(scat.n_views):
            G = coefficient_factor(d, scat, gammas, rho)
            V, lam = factor_top_eigpairs(G, r)
            step = max(step, np.linalg.norm(sign_align(V, gammas[d]) - gammas[d]))
            gammas[d] = V
            lambdas[d] = lam
        if step < eps:
            res = _stationarity_residuals(scat, gammas, lambdas, rho)
            if max(res) <= 1e-6:
                converged = True
                break
    res = _stationarity_residuals(scat, gammas, lambdas, rho)
    if not converged:
        warnings.warn(
            f"eigensystem sweeps did not converge in {max_iter} iterations "
            f"(last residuals {['%.2e' % x for x in res]})",
            stacklevel=2,
        )
    return GevSolution(
        gammas=gammas, lambdas=lambdas, iterations=it,
        converged=converged, residuals=res,
    )
