import numpy as np
import pytest
import scipy.linalg as sla

from conftest import synthetic_scatter
from sida.data import make_dataset, standardize
from sida.gev import (
    assemble_coefficient,
    coefficient_factor,
    factor_top_eigpairs,
    gev_objective,
    lda_directions,
    sign_align,
    solve_gev,
    whitened_lda_init,
)
from sida.scatter import build_scatter_set, scatter_matrices


def random_scatter(seed, dims, K=3, n_per_class=50, coupled=True):
    rng = np.random.default_rng(seed)
    n = K * n_per_class
    shared = rng.standard_normal((n, 2))
    views = []
    for p in dims:
        X = rng.standard_normal((n, p))
        if coupled:
            X[:, :2] += shared
        for k in range(K):
            X[k * n_per_class:(k + 1) * n_per_class, : min(2, p)] += 1.2 * k
        views.append(X)
    labels = np.repeat(np.arange(1, K + 1), n_per_class)
    ds = standardize(make_dataset(views, labels))
    return build_scatter_set(ds)


# ---------------------------------------------------------------------------
# classical LDA directions
# ---------------------------------------------------------------------------

def test_lda_directions_parallel_to_mean_difference():
    # exact spherical within-class scatter: the discriminant direction is the
    # mean difference itself
    mu1, mu2 = np.array([1.7, -0.4]), np.array([-0.3, 1.1])
    n1 = n2 = 50
    mu = (n1 * mu1 + n2 * mu2) / (n1 + n2)
    Sb = n1 * np.outer(mu1 - mu, mu1 - mu) + n2 * np.outer(mu2 - mu, mu2 - mu)
    Sw = 80.0 * np.eye(2)
    A = lda_directions(Sw, Sb, 1)
    diff = mu1 - mu2
    cos = abs(A[:, 0] @ diff) / (np.linalg.norm(diff) * np.linalg.norm(A[:, 0]))
    assert np.arccos(min(cos, 1.0)) < 1e-6


def test_lda_directions_degenerate_between():
    with pytest.warns(UserWarning, match="rank"):
        A = lda_directions(np.eye(4), np.zeros((4, 4)), 2)
    assert np.abs(A.T @ A - np.eye(2)).max() < 1e-8


def test_lda_eigenvalues_match_dense_generalized_oracle():
    rng = np.random.default_rng(3)
    p, K, npc = 5, 3, 40
    X = rng.standard_normal((K * npc, p))
    for k in range(K):
        X[k * npc:(k + 1) * npc, :2] += 1.5 * k
    y = np.repeat(np.arange(1, K + 1), npc)
    Sw, Sb, _, _ = scatter_matrices(X, y)
    Swr = Sw + 1e-8 * np.eye(p)
    # whitened route
    from sida.scatter import regularized_inv_sqrt

    W, _, _ = regularized_inv_sqrt(Swr, 0.0)
    lam_mine = np.sort(np.linalg.eigvalsh(W @ Sb @ W))[::-1][: K - 1]
    lam_oracle = np.sort(sla.eigh(Sb, Swr, eigvals_only=True))[::-1][: K - 1]
    assert np.abs(lam_mine - lam_oracle).max() < 1e-8


# ---------------------------------------------------------------------------
# coefficient assembly
# ---------------------------------------------------------------------------

def test_rho_one_coefficient_is_twice_m():
    scat = random_scatter(1, (6, 5))
    G0 = whitened_lda_init(scat, 2)
    C = assemble_coefficient(0, scat, G0, rho=1.0)
    assert np.abs(C - 2.0 * scat.M(0)).max() < 1e-10


def test_zero_cross_coefficient_is_scaled_m():
    rng = np.random.default_rng(2)
    B1 = rng.standard_normal((5, 2))
    B2 = rng.standard_normal((4, 2))
    scat = synthetic_scatter(
        [B1, B2], [np.zeros((10, 5)), rng.standard_normal((10, 4))], n=10,
        counts=[5, 5],
    )
    gammas = whitened_lda_init(scat, 1)
    for rho in (0.3, 0.7):
        C = assemble_coefficient(0, scat, gammas, rho=rho)
        assert np.abs(C - 2.0 * rho * scat.M(0)).max() < 1e-12


def test_coefficient_matches_term_by_term_oracle():
    scat = random_scatter(5, (5, 4, 3))
    rng = np.random.default_rng(6)
    gammas = [np.linalg.qr(rng.standard_normal((p, 2)))[0] for p in scat.dims]
    rho = 0.4
    c1, c2 = rho, 2 * (1 - rho) / (3 * 2)
    for d in range(3):
        M = scat.M(d)
        total = c1 * (M + M.T)
        for j in range(3):
            if j == d:
                continue
            Nbar = scat.N(d, j) @ gammas[j] @ gammas[j].T @ scat.N(j, d)
            total += c2 * (Nbar + Nbar.T)
        C = assemble_coefficient(d, scat, gammas, rho=rho)
        assert np.abs(C - total).max() < 1e-12 * max(1.0, np.abs(total).max())


def test_factor_eigpairs_agree_with_dense():
    scat = random_scatter(7, (6, 6))
    gammas = whitened_lda_init(scat, 2)
    F = coefficient_factor(0, scat, gammas, rho=0.5)
    V, lam = factor_top_eigpairs(F, 2)
    C = assemble_coefficient(0, scat, gammas, rho=0.5)
    w_dense = np.sort(np.linalg.eigvalsh(C))[::-1][:2]
    assert np.abs(lam - w_dense).max() < 1e-9 * max(1.0, w_dense[0])
    assert np.abs(C @ V - V * lam).max() < 1e-8 * max(1.0, w_dense[0])


# ---------------------------------------------------------------------------
# alternating solver
# ---------------------------------------------------------------------------

def test_decoupled_eigenvalues_scale_separate_lda():
    rng = np.random.default_rng(8)
    B1 = rng.standard_normal((6, 2))
    B2 = rng.standard_normal((5, 2))
    # zero whitened data makes every cross term exactly zero
    scat = synthetic_scatter(
        [B1, B2], [np.zeros((12, 6)), np.zeros((12, 5))], n=12, counts=[6, 6],
    )
    for rho in (0.25, 0.5, 0.9):
        sol = solve_gev(scat, rho=rho, r=2)
        for d, B in enumerate((B1, B2)):
            lam_sep = np.sort(np.linalg.eigvalsh(B @ B.T))[::-1][:2]
            assert np.abs(sol.gammas[d].T @ sol.gammas[d] - np.eye(2)).max() < 1e-8
            assert np.abs(sol.lambdas[d] - 2.0 * rho * lam_sep).max() < 1e-8


def test_rho_one_converges_in_one_sweep():
    scat = random_scatter(9, (6, 5))
    sol = solve_gev(scat, rho=1.0, r=2)
    assert sol.converged and sol.iterations == 1
    for d in range(2):
        C = assemble_coefficient(d, scat, sol.gammas, rho=1.0)
        V, lam = factor_top_eigpairs(coefficient_factor(d, scat, sol.gammas, 1.0), 2)
        assert np.abs(sign_align(V, sol.gammas[d]) - sol.gammas[d]).max() < 1e-10


def test_objective_monotone_and_stationary():
    scat = random_scatter(11, (6, 6), K=2)
    r = 1
    gammas = whitened_lda_init(scat, r)
    objs = [gev_objective(scat, gammas, 0.5)]
    for _ in range(30):
        for d in range(2):
            V, lam = factor_top_eigpairs(coefficient_factor(d, scat, gammas, 0.5), r)
            gammas[d] = V
            objs.append(gev_objective(scat, gammas, 0.5))
    diffs = np.diff(objs)
    assert diffs.min() > -1e-8
    sol = solve_gev(scat, rho=0.5, r=r)
    assert sol.converged
    assert max(sol.residuals) < 1e-6


def test_solver_is_bit_reproducible():
    scat = random_scatter(13, (7, 5))
    a = solve_gev(scat, rho=0.5)
    b = solve_gev(scat, rho=0.5)
    for d in range(2):
        assert np.array_equal(a.gammas[d], b.gammas[d])
        assert np.array_equal(a.lambdas[d], b.lambdas[d])


def test_returns_exactly_r_pairs_even_with_higher_rank():
    # coupling can push the effective rank above K-1; the solver still
    # returns r = K-1 pairs
    scat = random_scatter(15, (8, 8), K=2)
    sol = solve_gev(scat, rho=0.5)
    assert sol.gammas[0].shape == (8, 1)
    assert sol.lambdas[0].shape == (1,)
    F = coefficient_factor(0, scat, sol.gammas, 0.5)
    w = np.linalg.eigvalsh(F @ F.T)
    assert (w > 1e-6 * w.max()).sum() >= 1


def test_random_init_selectable_and_seeded():
    scat = random_scatter(17, (6, 5))
    a = solve_gev(scat, rho=0.5, init="random", seed=3)
    b = solve_gev(scat, rho=0.5, init="random", seed=3)
    for d in range(2):
        assert np.array_equal(a.gammas[d], b.gammas[d])
