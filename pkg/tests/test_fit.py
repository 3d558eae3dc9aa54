import json

import numpy as np
import pytest
import scipy.linalg as sla

from sida.data import COVARIATE, DataError, make_dataset, standardize
from sida.fit import DiscriminantModel, fit, gram_schmidt, load_model, model_from_dict, model_to_dict, save_model
from sida.gev import solve_gev
from sida.scatter import build_scatter_set
from sida.solvers import infinity_row_norm
from sida.tuning import view_tau_bounds


def strong_dataset(seed=0, dims=(40, 35), K=3, n_per_class=25, signal=6, coupled=True):
    rng = np.random.default_rng(seed)
    n = K * n_per_class
    shared = rng.standard_normal((n, 2))
    views = []
    for p in dims:
        X = rng.standard_normal((n, p))
        if coupled:
            X[:, :signal] += shared @ rng.uniform(0.6, 1.2, (2, signal))
        for k in range(K):
            X[k * n_per_class:(k + 1) * n_per_class, :signal] += 1.6 * (k - 1)
        views.append(X)
    labels = np.repeat(np.arange(1, K + 1), n_per_class)
    return standardize(make_dataset(views, labels))


def principal_angles(A, B):
    Qa = np.linalg.qr(A)[0]
    Qb = np.linalg.qr(B)[0]
    s = np.clip(np.linalg.svd(Qa.T @ Qb, compute_uv=False), -1, 1)
    return np.arccos(s)


# ---------------------------------------------------------------------------
# Gram-Schmidt
# ---------------------------------------------------------------------------

def test_gram_schmidt_fixed_point():
    rng = np.random.default_rng(0)
    Q0 = np.linalg.qr(rng.standard_normal((10, 3)))[0]
    Q = gram_schmidt(Q0)
    assert np.abs(np.abs(Q) - np.abs(Q0)).max() < 1e-12


def test_gram_schmidt_identical_columns():
    v = np.arange(1.0, 6.0)
    G = np.stack([v, v], axis=1)
    Q = gram_schmidt(G)
    assert np.linalg.norm(Q[:, 1]) == 0.0
    assert abs(np.linalg.norm(Q[:, 0]) - 1.0) < 1e-12


def test_gram_schmidt_orthonormalizes_random():
    rng = np.random.default_rng(1)
    G = rng.standard_normal((10, 3))
    Q = gram_schmidt(G)
    assert np.abs(Q.T @ Q - np.eye(3)).max() < 1e-10


def test_gram_schmidt_preserves_zero_rows():
    rng = np.random.default_rng(2)
    G = rng.standard_normal((8, 2))
    G[[1, 4]] = 0.0
    Q = gram_schmidt(G)
    assert np.abs(Q[[1, 4]]).max() == 0.0


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def test_fit_tau_zero_recovers_eigensystem_column_space():
    ds = strong_dataset(3)
    scat = build_scatter_set(ds)
    model = fit(ds, taus=[0.0, 0.0], scatter_set=scat)
    sol = solve_gev(scat, rho=0.5)
    for d in range(2):
        ang = principal_angles(model.gammas[d], sol.gammas[d])
        assert ang.max() < 1e-6


def test_fit_tau_too_large_raises():
    ds = strong_dataset(4)
    scat = build_scatter_set(ds)
    sol = solve_gev(scat, rho=0.5)
    bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, 0.5)
    big = [10.0 * hi for _, hi in bounds]
    with pytest.raises(DataError, match="tau too large"):
        fit(ds, taus=big, scatter_set=scat)


def test_fit_covariate_view_stays_dense():
    rng = np.random.default_rng(5)
    base = strong_dataset(5)
    cov = rng.standard_normal((base.n_samples, 4))
    cov[base.labels == 3, :2] += 1.0
    ds = standardize(make_dataset(
        [np.asarray(v) for v in (base.views[0], base.views[1], cov)],
        base.labels, roles=["penalized", "penalized", "covariate"],
    ))
    scat = build_scatter_set(ds)
    sol = solve_gev(scat, rho=0.5)
    bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, 0.5)
    taus = [np.sqrt(lo * hi) for lo, hi in bounds[:2]] + [123.0]  # covariate tau is forced to 0
    model = fit(ds, taus=taus, scatter_set=scat)
    assert model.config["taus"][2] == 0.0
    assert len(model.selected[2]) == 4  # fully dense
    assert len(model.selected[0]) < ds.dims[0]


def test_fit_is_deterministic():
    ds = strong_dataset(6)
    scat = build_scatter_set(ds)
    sol = solve_gev(scat, rho=0.5)
    bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, 0.5)
    taus = [np.sqrt(lo * hi) for lo, hi in bounds]
    a = fit(ds, taus=taus)
    b = fit(ds, taus=taus)
    for d in range(2):
        assert np.array_equal(a.gammas[d], b.gammas[d])
        assert np.array_equal(a.centroids_view[d], b.centroids_view[d])
    assert np.array_equal(a.centroids_pooled, b.centroids_pooled)


def test_fit_zero_coupling_matches_separation_only_support():
    # view 2 pure noise: the coupled fit's view-1 support should essentially
    # match a separation-only (rho = 1) fit
    jaccs = []
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        K, npc, p = 3, 30, 30
        n = K * npc
        X1 = rng.standard_normal((n, p))
        for k in range(K):
            X1[k * npc:(k + 1) * npc, :5] += 1.8 * (k - 1)
        X2 = rng.standard_normal((n, p))
        labels = np.repeat(np.arange(1, K + 1), npc)
        ds = standardize(make_dataset([X1, X2], labels))
        scat = build_scatter_set(ds)
        sol = solve_gev(scat, rho=0.5)
        bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, 0.5)
        taus = [np.sqrt(lo * hi) for lo, hi in bounds]
        m_joint = fit(ds, taus=taus, rho=0.5, scatter_set=scat)
        sol1 = solve_gev(scat, rho=1.0)
        b1 = view_tau_bounds(scat, sol1.gammas, sol1.lambdas, 1.0)
        t1 = [np.sqrt(lo * hi) for lo, hi in b1]
        m_sep = fit(ds, taus=t1, rho=1.0, scatter_set=scat)
        a = set(m_joint.selected[0].tolist())
        b = set(m_sep.selected[0].tolist())
        jaccs.append(len(a & b) / max(len(a | b), 1))
    assert np.mean(jaccs) >= 0.8


def test_fit_selected_support_is_frozen():
    ds = strong_dataset(7)
    scat = build_scatter_set(ds)
    sol = solve_gev(scat, rho=0.5)
    bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, 0.5)
    taus = [np.sqrt(lo * hi) for lo, hi in bounds]
    model = fit(ds, taus=taus, scatter_set=scat)
    for d in range(2):
        outside = np.setdiff1d(np.arange(ds.dims[d]), model.selected[d])
        assert np.abs(model.gammas[d][outside]).max() == 0.0
        nz = model.gammas[d][:, np.linalg.norm(model.gammas[d], axis=0) > 0]
        assert np.abs(nz.T @ nz - np.eye(nz.shape[1])).max() < 1e-8


def test_fit_requires_standardized_input():
    ds = make_dataset([np.random.default_rng(0).standard_normal((9, 4))], [1, 1, 1, 2, 2, 2, 3, 3, 3])
    with pytest.raises(DataError, match="standardized"):
        fit(ds, taus=[0.1])


def test_fit_method_validation():
    ds = strong_dataset(8)
    with pytest.raises(DataError, match="graph"):
        fit(ds, taus=[0.1, 0.1], methods=["sidanet", "sida"])
    with pytest.raises(DataError, match="covariate"):
        fit(ds, taus=[0.1, 0.1], methods=["covariate", "sida"])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_model_roundtrip(tmp_path):
    ds = strong_dataset(9)
    scat = build_scatter_set(ds)
    sol = solve_gev(scat, rho=0.5)
    bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, 0.5)
    taus = [np.sqrt(lo * hi) for lo, hi in bounds]
    model = fit(ds, taus=taus, scatter_set=scat)
    path = tmp_path / "model.json"
    save_model(path, model, manifest={"command": "fit"})
    loaded = load_model(path)
    for d in range(2):
        assert np.array_equal(loaded.gammas[d], model.gammas[d])
        assert np.array_equal(loaded.selected[d], model.selected[d])
        assert np.array_equal(loaded.stats[d][0], model.stats[d][0])
    assert np.array_equal(loaded.centroids_pooled, model.centroids_pooled)
    assert loaded.config == model.config
    # byte determinism of the serialization itself
    path2 = tmp_path / "model2.json"
    save_model(path2, model, manifest={"command": "fit"})
    assert path.read_bytes() == path2.read_bytes()


def test_model_rejects_unknown_format():
    with pytest.raises(DataError, match="recognized"):
        model_from_dict({"format": "something-else"})
