import numpy as np
import pytest

from sida.data import make_dataset, standardize
from sida.scatter import ScatterSet


def small_dataset(seed=0, n_per_class=12, dims=(8, 6), K=3, separation=1.5):
    """Small separable multi-view dataset for fast unit tests."""
    rng = np.random.default_rng(seed)
    n = n_per_class * K
    views = []
    for p in dims:
        X = rng.standard_normal((n, p))
        for k in range(K):
            rows = slice(k * n_per_class, (k + 1) * n_per_class)
            X[rows, :3] += separation * (k - 1) * np.arange(1, 4) / 3.0
        views.append(X)
    labels = np.repeat(np.arange(1, K + 1), n_per_class)
    return make_dataset(views, labels)


@pytest.fixture
def tiny_ds():
    return standardize(small_dataset())


def synthetic_scatter(B_list, Yw_list, n, counts):
    """Hand-built whitened system; W and Sw are identities (only the factors
    matter to the solvers)."""
    dims = tuple(B.shape[0] for B in B_list)
    return ScatterSet(
        Sw=[np.eye(p) for p in dims],
        gamma=[0.0] * len(dims),
        W=[np.eye(p) for p in dims],
        B=[np.asarray(B, float) for B in B_list],
        Yw=[np.asarray(Y, float) for Y in Yw_list],
        n=n,
        dims=dims,
        counts=np.asarray(counts),
    )
