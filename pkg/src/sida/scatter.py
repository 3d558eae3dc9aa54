"""Scatter matrices, regularized whitening, and the whitened per-view/cross-view operators.

The whitened quantities are kept in factored form: the between-class part of
view d is B_d B_d^T with B_d = W_d H_d (H_d the sqrt(n_k)-weighted class-mean
deviations), and the cross term N_dj = Y_d^T Y_j / (n-1) with Y_d the
grand-centered data whitened by W_d. Dense matrices are materialized on
demand; the iterative solvers only ever touch the skinny factors.
"""

import numpy as np

from .data import DataError, MultiViewDataset

# ridge multiplier applied to trace(Sw)/p when gamma='auto'; the absolute
# floor keeps W finite for an all-zero scatter
AUTO_RIDGE_MULT = 1.0
AUTO_RIDGE_FLOOR = 1e-8


class NumericalError(RuntimeError):
    """Raised when a matrix factorization cannot proceed at the requested tolerance."""


def scatter_matrices(X, y):
    """Within/between scatter of one view, as unscaled sums over samples.

    Returns (Sw, Sb, class_means, overall_mean) with
    Sw = sum_k sum_i (x_i - mu_k)(x_i - mu_k)^T and
    Sb = sum_k n_k (mu_k - mu)(mu_k - mu)^T, mu = (1/n) sum_k n_k mu_k.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n, p = X.shape
    K = int(y.max())
    counts = np.bincount(y, minlength=K + 1)[1:]
    if (counts < 1).any():
        missing = int(np.argmin(counts)) + 1
        raise DataError(f"class {missing} has no samples")
    means = np.zeros((K, p))
    Sw = np.zeros((p, p))
    for k in range(1, K + 1):
        Xk = X[y == k]
        means[k - 1] = Xk.mean(axis=0)
        R = Xk - means[k - 1]
        Sw += R.T @ R
    mu = (counts @ means) / n
    dev = means - mu
    Sb = (dev * counts[:, None]).T @ dev
    return Sw, Sb, means, mu


def between_factor(means, counts, mu):
    """H with Sb = H H^T: columns sqrt(n_k) (mu_k - mu)."""
    return ((means - mu) * np.sqrt(counts)[:, None]).T


def cross_covariance(Xd, Xj):
    """Sample cross-covariance (1/(n-1)) Xd^T Xj; inputs must be column-centered."""
    Xd = np.asarray(Xd, dtype=float)
    Xj = np.asarray(Xj, dtype=float)
    if Xd.shape[0] != Xj.shape[0]:
        raise DataError(
            f"row mismatch: {Xd.shape[0]} vs {Xj.shape[0]} samples"
        )
    return Xd.T @ Xj / (Xd.shape[0] - 1)


def regularized_inv_sqrt(Sw, gamma="auto"):
    """Symmetric inverse square root of Sw + gamma*I.

    gamma='auto' uses AUTO_RIDGE_MULT * trace(Sw)/p with an absolute floor of
    AUTO_RIDGE_FLOOR. Returns (W, gamma_used, eigenvalues_of_regularized).
    """
    Sw = np.asarray(Sw, dtype=float)
    p = Sw.shape[0]
    if gamma == "auto":
        gamma = max(AUTO_RIDGE_MULT * np.trace(Sw) / p, AUTO_RIDGE_FLOOR)
    w, V = np.linalg.eigh(0.5 * (Sw + Sw.T) + gamma * np.eye(p))
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise NumericalError(
            f"regularized scatter is numerically singular (min eig {w[0]:.3e}, "
            f"max eig {w[-1]:.3e}); increase the ridge gamma"
        )
    W = (V / np.sqrt(w)) @ V.T
    return W, gamma, w


class ScatterSet:
    """Whitened scatter system for all views of a standardized dataset.

    Attributes per view d (0-based): Sw[d], gamma[d], W[d] (= (Sw+gamma I)^(-1/2)),
    B[d] (M_d = B B^T), Yw[d] (whitened centered data; N_dj = Yw[d]^T Yw[j] / (n-1)).
    """

    def __init__(self, Sw, gamma, W, B, Yw, n, dims, counts):
        self.Sw = Sw
        self.gamma = gamma
        self.W = W
        self.B = B
        self.Yw = Yw
        self.n = n
        self.dims = dims
        self.counts = counts

    @property
    def n_views(self):
        return len(self.W)

    def M(self, d):
        """Dense whitened between-class matrix of view d."""
        return self.B[d] @ self.B[d].T

    def Sb(self, d):
        """Dense between-class scatter of view d."""
        H = np.linalg.solve(self.W[d], self.B[d])  # W is SPD; H = W^{-1} B
        return H @ H.T

    def N(self, d, j):
        """Dense whitened cross term between views d and j (N_jd = N_dj^T)."""
        return self.Yw[d].T @ self.Yw[j] / (self.n - 1)

    def N_apply(self, d, j, G):
        """N_dj @ G without materializing N_dj."""
        return self.Yw[d].T @ (self.Yw[j] @ G) / (self.n - 1)


def build_scatter_set(ds: MultiViewDataset, gamma="auto") -> ScatterSet:
    """Assemble the whitened system for every view of a standardized dataset.

    gamma is 'auto', a scalar, or a per-view sequence of ridge values.
    """
    if not ds.standardized:
        raise DataError("dataset must be standardized before building scatter")
    D = ds.n_views
    if gamma == "auto" or np.isscalar(gamma):
        gammas = [gamma] * D
    else:
        gammas = list(gamma)
        if len(gammas) != D:
            raise DataError("need one ridge value per view")
    y = ds.labels
    n = ds.n_samples
    Sw_all, g_all, W_all, B_all, Yw_all = [], [], [], [], []
    counts = ds.class_counts()
    for d, X in enumerate(ds.views):
        Sw, _Sb, means, mu = scatter_matrices(X, y)
        W, g, _ = regularized_inv_sqrt(Sw, gammas[d])
        H = between_factor(means, counts, mu)
        Xc = X - X.mean(axis=0)
        Sw_all.append(Sw)
        g_all.append(g)
        W_all.append(W)
        B_all.append(W @ H)
        Yw_all.append(Xc @ W)
    return ScatterSet(
        Sw=Sw_all, gamma=g_all, W=W_all, B=B_all, Yw=Yw_all,
        n=n, dims=ds.dims, counts=counts,
    )
