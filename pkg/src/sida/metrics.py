"""Discriminant scores, nearest-centroid classification, selection metrics,
RV-coefficient association, and resampling-based stability selection."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DataError, MultiViewDataset, apply_stats
from .fit import DiscriminantModel


def scores(X, model: DiscriminantModel, d):
    """Discriminant scores U = X @ Gamma_hat for view d; X must already be
    standardized with the model's training statistics."""
    X = np.asarray(X, dtype=float)
    G = model.gammas[d]
    if X.shape[1] != G.shape[0]:
        raise DataError(
            f"view {d + 1} has {X.shape[1]} columns; model expects {G.shape[0]}"
        )
    return X @ G


def standardize_like(model: DiscriminantModel, views):
    """Apply the model's training standardization to new raw views."""
    return [apply_stats(np.asarray(X, float), model.stats[d]) for d, X in enumerate(views)]


def classify_pooled(views, model: DiscriminantModel):
    """Nearest-centroid labels from the concatenated per-view scores.

    views: list of D standardized matrices (or single sample rows). Ties go to
    the smallest class index.
    """
    if len(views) != model.n_views:
        raise DataError(
            f"pooled rule needs all {model.n_views} views; got {len(views)} "
            "(classify with classify_separate on the available view instead)"
        )
    mats = [np.atleast_2d(np.asarray(Z, dtype=float)) for Z in views]
    V = np.hstack([scores(mats[d], model, d) for d in range(model.n_views)])
    d2 = ((V[:, None, :] - model.centroids_pooled[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1) + 1


def classify_separate(Z, model: DiscriminantModel, d):
    """Nearest-centroid labels from view d's scores alone."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    U = scores(Z, model, d)
    d2 = ((U[:, None, :] - model.centroids_view[d][None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1) + 1


def error_rate(predicted, truth):
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    return float((predicted != truth).mean())


def selection_metrics(selected, truth, p):
    """(TPR, FPR, F1) from a selected index set against the true signal set.

    Index convention follows the caller (0- or 1-based), as long as it is
    consistent; p is the total variable count.
    """
    selected = set(int(i) for i in selected)
    truth = set(int(i) for i in truth)
    tp = len(selected & truth)
    fp = len(selected - truth)
    fn = len(truth - selected)
    tn = p - len(selected | truth)
    tpr = tp / len(truth) if truth else 0.0
    fpr = fp / (fp + tn) if (fp + tn) > 0 else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
    return tpr, fpr, f1


def rv_coefficient(Xc, Yc):
    """RV coefficient of two column-centered matrices; 0/0 is 0 by convention."""
    Xc = np.asarray(Xc, dtype=float)
    Yc = np.asarray(Yc, dtype=float)
    if Xc.shape[0] != Yc.shape[0]:
        raise DataError("row mismatch in RV computation")
    Sxy = Xc.T @ Yc
    Sxx = Xc.T @ Xc
    Syy = Yc.T @ Yc
    num = float(np.sum(Sxy * Sxy))
    den = float(np.sqrt(np.sum(Sxx * Sxx) * np.sum(Syy * Syy)))
    if den == 0.0:
        return 0.0
    return num / den


def estimated_correlation(model: DiscriminantModel, test_ds: MultiViewDataset):
    """Average pairwise RV of the projected test views (projections centered first)."""
    D = model.n_views
    if D < 2:
        raise DataError("need at least two views for an association estimate")
    proj = []
    for d in range(D):
        U = scores(test_ds.views[d], model, d)
        proj.append(U - U.mean(axis=0))
    if all(np.abs(U).max() == 0.0 for U in proj):
        warnings.warn("all projections are zero; association set to 0", stacklevel=2)
        return 0.0
    total = 0.0
    for d in range(D):
        for j in range(d + 1, D):
            total += rv_coefficient(proj[d], proj[j])
    return 2.0 * total / (D * (D - 1))


@dataclass
class EvalReport:
    """Evaluation summary: pooled error, per-view selection metrics when the
    ground truth is known, and the estimated association rho_hat."""

    error_rate: float
    rho_hat: float
    selected_counts: list
    per_view: list = field(default_factory=list)  # dicts with tpr/fpr/f1 when truth given
    separate_errors: list = field(default_factory=list)

    def to_dict(self):
        return {
            "error_rate": self.error_rate,
            "rho_hat": self.rho_hat,
            "selected_counts": [int(c) for c in self.selected_counts],
            "per_view": self.per_view,
            "separate_errors": [float(e) for e in self.separate_errors],
        }

    def table(self):
        lines = [
            f"pooled error rate : {self.error_rate:.4f}",
            f"estimated rho_hat : {self.rho_hat:.4f}",
        ]
        for d, cnt in enumerate(self.selected_counts):
            extra = ""
            if d < len(self.per_view) and self.per_view[d]:
                m = self.per_view[d]
                extra = (
                    f"  TPR={m['tpr']:.4f} FPR={m['fpr']:.4f} F1={m['f1']:.4f}"
                )
            sep = ""
            if d < len(self.separate_errors):
                sep = f"  separate-error={self.separate_errors[d]:.4f}"
            lines.append(f"view {d + 1}: selected={cnt}{extra}{sep}")
        return "\n".join(lines)


def evaluate(model: DiscriminantModel, test_ds: MultiViewDataset, truth=None):
    """Classify a standardized test dataset and summarize the fit quality.

    truth: optional per-view iterables of true signal indices (1-based) for
    selection metrics.
    """
    pred = classify_pooled(list(test_ds.views), model)
    err = error_rate(pred, test_ds.labels)
    rho_hat = estimated_correlation(model, test_ds)
    per_view = []
    if truth is not None:
        for d in range(model.n_views):
            sel = model.selected[d] + 1
            tpr, fpr, f1 = selection_metrics(sel, truth[d], model.gammas[d].shape[0])
            per_view.append({"tpr": tpr, "fpr": fpr, "f1": f1})
    sep_errors = [
        error_rate(classify_separate(test_ds.views[d], model, d), test_ds.labels)
        for d in range(model.n_views)
    ]
    return EvalReport(
        error_rate=err,
        rho_hat=rho_hat,
        selected_counts=[len(s) for s in model.selected],
        per_view=per_view,
        separate_errors=sep_errors,
    )


# ---------------------------------------------------------------------------
# stability selection
# ---------------------------------------------------------------------------

def _stratified_half_split(labels, rng):
    """50/50 split preserving class proportions; returns boolean train mask."""
    train = np.zeros(len(labels), dtype=bool)
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        idx = idx[rng.permutation(len(idx))]
        train[idx[: (len(idx) + 1) // 2]] = True
    return train


def _stability_rep(ds, graphs, tuning_spec, seed, i):
    """One stability repetition: half-sample, tune, fit, record selection and
    per-variable effect sizes. Module-level so process pools can pickle it."""
    from .fit import fit as _fit
    from .tuning import cross_validate

    rng = np.random.default_rng(seed + 7919 * (i + 1))
    train = _stratified_half_split(ds.labels, rng)
    sub = MultiViewDataset(
        views=tuple(X[train] for X in ds.views),
        labels=ds.labels[train],
        roles=ds.roles,
        standardized=True,
        stats=ds.stats,
        var_names=ds.var_names,
    )
    spec_i = tuning_spec.with_seed(seed + 7919 * (i + 1))
    cv = cross_validate(sub, graphs=graphs, spec=spec_i, workers=1)
    model = _fit(
        sub, taus=cv.best, graphs=graphs, rho=spec_i.rho, eta=spec_i.eta,
        gamma=spec_i.gamma, seed=spec_i.seed,
    )
    out = []
    for d in range(ds.n_views):
        norms = np.linalg.norm(model.gammas[d], axis=1) / model.r
        mask = np.zeros(ds.dims[d])
        mask[model.selected[d]] = 1.0
        out.append((mask, norms * mask))
    return out


def stability_selection(
    ds: MultiViewDataset,
    graphs=None,
    tuning_spec=None,
    reps=20,
    freq_threshold=0.6,
    effect_percentile=0.01,
    seed=0,
    workers=1,
):
    """Resampling filter: repeatedly tune and fit on stratified half-samples,
    then keep variables that are selected often and carry large effects.

    A variable survives when it is selected in at least freq_threshold * reps
    runs and its average effect size (row l2 norm / r, averaged over the runs
    where it was selected) ranks within the top effect_percentile of its view.
    Returns (per-view stable 1-based index arrays, per-view frequencies,
    per-view mean effects).
    """
    from .tuning import TuningSpec  # local import to avoid a cycle

    if reps < 2:
        raise DataError("need at least two repetitions")
    if tuning_spec is None:
        tuning_spec = TuningSpec(seed=seed)
    D = ds.n_views
    dims = ds.dims
    sel_count = [np.zeros(p) for p in dims]
    effect_sum = [np.zeros(p) for p in dims]

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [
                ex.submit(_stability_rep, ds, graphs, tuning_spec, seed, i)
                for i in range(reps)
            ]
            results = [fut.result() for fut in futures]
    else:
        results = [_stability_rep(ds, graphs, tuning_spec, seed, i) for i in range(reps)]
    for rep in results:
        for d in range(D):
            sel_count[d] += rep[d][0]
            effect_sum[d] += rep[d][1]

    stable, freqs, effects = [], [], []
    for d in range(D):
        freq = sel_count[d] / reps
        with np.errstate(invalid="ignore", divide="ignore"):
            mean_effect = np.where(sel_count[d] > 0, effect_sum[d] / np.maximum(sel_count[d], 1), 0.0)
        k = max(1, int(np.ceil(effect_percentile * dims[d])))
        cutoff = np.sort(mean_effect)[::-1][k - 1]
        keep = (freq >= freq_threshold) & (mean_effect >= cutoff) & (mean_effect > 0)
        stable.append(np.flatnonzero(keep) + 1)
        freqs.append(freq)
        effects.append(mean_effect)
    return stable, freqs, effects
