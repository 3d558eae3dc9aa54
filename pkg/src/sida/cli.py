"""Command-line front end: simulate, cv, fit, predict, evaluate, stability.

Every run resolves its configuration with precedence flags > config file >
environment (SIDA_* variables) > defaults, echoes the resolved configuration
into each artifact for provenance, and removes partial outputs on failure.
Exit codes: 0 ok, 2 validation, 3 numerical failure, 4 I/O.
"""

import argparse
import json
import os
import sys

import numpy as np

from .data import (
    COVARIATE,
    PENALIZED,
    DataError,
    load_edge_list,
    load_labels_csv,
    load_view_csv,
    make_dataset,
    save_edge_list,
    save_labels_csv,
    save_matrix_csv,
    standardize,
)
from .fit import METHOD_COVARIATE, fit, load_model, save_model
from .metrics import (
    classify_pooled,
    classify_separate,
    evaluate,
    stability_selection,
    standardize_like,
)
from .scatter import NumericalError
from .simulate import GenerationError, ScenarioSpec, generate
from .tuning import TuningSpec, cross_validate, cv_report_rows

ENV_PREFIX = "SIDA_"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, code, slug, message):
        super().__init__(message)
        self.code = code
        self.slug = slug


# ---------------------------------------------------------------------------
# configuration resolution
# ---------------------------------------------------------------------------

def config_resolve(args, option_names):
    """Merge flag values, config-file entries, environment variables and
    defaults (in that precedence) into one dict of resolved options."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as e:
            raise CliError(EXIT_IO, "config_unreadable", str(e)) from None
        except json.JSONDecodeError as e:
            raise CliError(EXIT_VALIDATION, "config_invalid", str(e)) from None
    resolved = {}
    for name, default, conv in option_names:
        val = getattr(args, name, None)
        if val is None:
            key = name.replace("_", "-")
            if name in file_cfg:
                val = file_cfg[name]
            elif key in file_cfg:
                val = file_cfg[key]
            else:
                env = os.environ.get(ENV_PREFIX + name.upper())
                val = env if env is not None else default
        if val is not None and callable(conv):
            try:
                val = conv(val)
            except (TypeError, ValueError):
                raise CliError(
                    EXIT_VALIDATION, "bad_option", f"cannot parse --{name.replace('_', '-')}={val!r}"
                ) from None
        resolved[name] = val
    return resolved


def _parse_list(text, conv=str):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [conv(v) if v not in ("", None) else None for v in text]
    return [conv(v) if v != "" else None for v in str(text).split(",")]


def _boolish(v):
    if isinstance(v, bool):
        return v
    return str(v).lower() in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# artifact tracking (partial outputs removed on failure)
# ---------------------------------------------------------------------------

class ArtifactSink:
    def __init__(self):
        self.paths = []

    def path(self, p):
        self.paths.append(p)
        return p

    def cleanup(self):
        for p in self.paths:
            try:
                if os.path.exists(p):
                    os.remove(p)
            except OSError:
                pass


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path, header, rows, manifest=None):
    with open(path, "w", encoding="utf-8") as fh:
        if manifest is not None:
            fh.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# shared input loading
# ---------------------------------------------------------------------------

def _load_views(view_paths):
    mats, names = [], []
    for path in view_paths:
        if not os.path.exists(path):
            raise CliError(EXIT_VALIDATION, "missing_file", f"view file not found: {path}")
        X, nm = load_view_csv(path)
        mats.append(X)
        names.append(nm)
    return mats, names


def _load_inputs(cfg, need_labels=True):
    views = _parse_list(cfg["views"])
    if not views:
        raise CliError(EXIT_VALIDATION, "missing_views", "--views is required")
    mats, names = _load_views(views)
    labels = None
    if need_labels:
        if not cfg.get("labels"):
            raise CliError(EXIT_VALIDATION, "missing_labels", "--labels is required")
        if not os.path.exists(cfg["labels"]):
            raise CliError(
                EXIT_VALIDATION, "missing_file", f"labels file not found: {cfg['labels']}"
            )
        labels = load_labels_csv(cfg["labels"])
    methods = _parse_list(cfg.get("method"))
    if methods is not None and len(methods) != len(mats):
        raise CliError(
            EXIT_VALIDATION, "view_count_mismatch",
            f"{len(methods)} methods for {len(mats)} views",
        )
    graph_paths = _parse_list(cfg.get("graphs"))
    graphs = None
    if graph_paths is not None:
        if len(graph_paths) != len(mats):
            raise CliError(
                EXIT_VALIDATION, "view_count_mismatch",
                f"{len(graph_paths)} graph slots for {len(mats)} views",
            )
        graphs = []
        for d, gp in enumerate(graph_paths):
            if gp is None:
                graphs.append(None)
            else:
                if not os.path.exists(gp):
                    raise CliError(EXIT_VALIDATION, "missing_file", f"graph file not found: {gp}")
                graphs.append(load_edge_list(gp, mats[d].shape[1], view_index=d))
    roles = None
    if methods is not None:
        roles = [COVARIATE if m == METHOD_COVARIATE else PENALIZED for m in methods]
    return mats, names, labels, methods, graphs, roles


def _standardized_dataset(mats, labels, roles, names):
    ds = make_dataset(mats, labels, roles=roles, var_names=names)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return standardize(ds)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

COMMON_OPTS = [
    ("views", None, str),
    ("labels", None, str),
    ("graphs", None, str),
    ("method", None, str),
    ("rho", 0.5, float),
    ("eta", 0.5, float),
    ("gamma", "auto", lambda v: v if v == "auto" else float(v)),
    ("seed", 0, int),
    ("out", None, str),
]


def cmd_simulate(cfg, sink):
    spec = ScenarioSpec(
        scenario=cfg["scenario"].upper(),
        setting=cfg["setting"],
        dims=tuple(_parse_list(cfg["dims"], int)),
        n_per_class=cfg["n_per_class"],
        seed=cfg["seed"],
        rho1=cfg["rho1"],
        rho2=cfg["rho2"],
        c=cfg["c"],
    )
    out = cfg["out"] or "."
    os.makedirs(out, exist_ok=True)
    data = generate(spec)
    manifest = {"command": "simulate", "config": _manifest_cfg(cfg), "seed": cfg["seed"]}
    for part, ds in (("train", data.train), ("test", data.test)):
        for d, X in enumerate(ds.views):
            save_matrix_csv(
                sink.path(os.path.join(out, f"view{d + 1}_{part}.csv")),
                X, names=list(ds.var_names[d]),
            )
        save_labels_csv(sink.path(os.path.join(out, f"labels_{part}.csv")), ds.labels)
    for d, idx in enumerate(data.truth):
        _write_csv(
            sink.path(os.path.join(out, f"truth{d + 1}.csv")), ["index"],
            [[int(i)] for i in idx],
        )
    if data.graphs is not None:
        for d, g in enumerate(data.graphs):
            save_edge_list(sink.path(os.path.join(out, f"graph{d + 1}.tsv")), g)
    _write_json(sink.path(os.path.join(out, "manifest.json")), manifest)
    return EXIT_OK


def _tuning_spec_from_cfg(cfg):
    return TuningSpec(
        mode=cfg["search"],
        points_per_view=cfg["grid_points"],
        random_fraction=cfg["random_frac"],
        folds=cfg["folds"],
        seed=cfg["seed"],
        rho=cfg["rho"],
        eta=cfg["eta"],
        spacing=cfg["spacing"],
        gamma=cfg["gamma"],
    )


def cmd_cv(cfg, sink):
    mats, names, labels, methods, graphs, roles = _load_inputs(cfg)
    ds = _standardized_dataset(mats, labels, roles, names)
    spec = _tuning_spec_from_cfg(cfg)
    result = cross_validate(
        ds, graphs=graphs, spec=spec, methods=methods, workers=cfg["workers"]
    )
    out = cfg["out"] or "."
    os.makedirs(out, exist_ok=True)
    manifest = {"command": "cv", "config": _manifest_cfg(cfg), "seed": cfg["seed"]}
    header, rows = cv_report_rows(result)
    _write_csv(sink.path(os.path.join(out, "cv_report.csv")), header, rows, manifest)
    chosen = {
        "manifest": manifest,
        "best_taus": [float(t) for t in result.best],
        "best_mean_error": float(result.mean_errors[result.best_index()]),
        "bounds": [[float(a), float(b)] for a, b in result.bounds],
    }
    _write_json(sink.path(os.path.join(out, "chosen.json")), chosen)
    return EXIT_OK


def _resolve_taus(cfg, n_views):
    if cfg.get("taus_from"):
        try:
            with open(cfg["taus_from"], "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as e:
            raise CliError(EXIT_IO, "taus_unreadable", str(e)) from None
        taus = doc.get("best_taus")
        if taus is None:
            raise CliError(EXIT_VALIDATION, "bad_taus_file", "no best_taus entry")
    else:
        taus = _parse_list(cfg.get("taus"), float)
    if taus is None:
        raise CliError(EXIT_VALIDATION, "missing_taus", "--taus or --taus-from is required")
    if len(taus) != n_views:
        raise CliError(
            EXIT_VALIDATION, "view_count_mismatch",
            f"{len(taus)} taus for {n_views} views",
        )
    return [float(t) for t in taus]


def cmd_fit(cfg, sink):
    mats, names, labels, methods, graphs, roles = _load_inputs(cfg)
    ds = _standardized_dataset(mats, labels, roles, names)
    taus = _resolve_taus(cfg, len(mats))
    try:
        model = fit(
            ds, taus=taus, graphs=graphs, methods=methods, rho=cfg["rho"],
            eta=cfg["eta"], gamma=cfg["gamma"], seed=cfg["seed"],
        )
    except DataError as e:
        if "tau too large" in str(e):
            raise CliError(EXIT_NUMERICAL, "tau_too_large", str(e)) from None
        raise
    out = cfg["out"] or "model.json"
    manifest = {"command": "fit", "config": _manifest_cfg(cfg), "seed": cfg["seed"]}
    save_model(sink.path(out), model, manifest=manifest)
    return EXIT_OK


def cmd_predict(cfg, sink):
    if not cfg.get("model"):
        raise CliError(EXIT_VALIDATION, "missing_model", "--model is required")
    if not os.path.exists(cfg["model"]):
        raise CliError(EXIT_VALIDATION, "missing_file", f"model file not found: {cfg['model']}")
    model = load_model(cfg["model"])
    mats, _, _, _, _, _ = _load_inputs(cfg, need_labels=False)
    if len(mats) != model.n_views:
        raise CliError(
            EXIT_VALIDATION, "view_count_mismatch",
            f"{len(mats)} views supplied; model expects {model.n_views}",
        )
    std = standardize_like(model, mats)
    pooled = classify_pooled(std, model)
    header = ["sample", "pooled"]
    cols = [np.arange(1, len(pooled) + 1), pooled]
    if cfg["separate"]:
        for d in range(model.n_views):
            header.append(f"separate_{d + 1}")
            cols.append(classify_separate(std[d], model, d))
    rows = [[int(c[i]) for c in cols] for i in range(len(pooled))]
    manifest = {"command": "predict", "config": _manifest_cfg(cfg), "seed": cfg["seed"]}
    out = cfg["out"] or "predictions.csv"
    _write_csv(sink.path(out), header, rows, manifest)
    return EXIT_OK


def cmd_evaluate(cfg, sink):
    if not cfg.get("model"):
        raise CliError(EXIT_VALIDATION, "missing_model", "--model is required")
    if not os.path.exists(cfg["model"]):
        raise CliError(EXIT_VALIDATION, "missing_file", f"model file not found: {cfg['model']}")
    model = load_model(cfg["model"])
    mats, names, labels, _, _, _ = _load_inputs(cfg)
    std = standardize_like(model, mats)
    from .data import MultiViewDataset

    base = make_dataset(std, labels, roles=None, var_names=names)
    ds = MultiViewDataset(
        views=base.views, labels=base.labels, roles=base.roles, standardized=True,
        stats=tuple((m.copy(), s.copy()) for m, s in model.stats),
        var_names=base.var_names,
    )
    truth = None
    truth_paths = _parse_list(cfg.get("truth"))
    if truth_paths is not None:
        if len(truth_paths) != model.n_views:
            raise CliError(
                EXIT_VALIDATION, "view_count_mismatch",
                f"{len(truth_paths)} truth files for {model.n_views} views",
            )
        truth = []
        for tp in truth_paths:
            if not os.path.exists(tp):
                raise CliError(EXIT_VALIDATION, "missing_file", f"truth file not found: {tp}")
            truth.append(load_labels_csv(tp))
    report = evaluate(model, ds, truth=truth)
    manifest = {"command": "evaluate", "config": _manifest_cfg(cfg), "seed": cfg["seed"]}
    doc = report.to_dict()
    doc["manifest"] = manifest
    out = cfg["out"] or "report.json"
    _write_json(sink.path(out), doc)
    print(report.table())
    return EXIT_OK


def cmd_stability(cfg, sink):
    mats, names, labels, methods, graphs, roles = _load_inputs(cfg)
    ds = _standardized_dataset(mats, labels, roles, names)
    spec = _tuning_spec_from_cfg(cfg)
    stable, freqs, effects = stability_selection(
        ds, graphs=graphs, tuning_spec=spec, reps=cfg["reps"],
        freq_threshold=cfg["freq_threshold"],
        effect_percentile=cfg["effect_percentile"],
        seed=cfg["seed"], workers=cfg["workers"],
    )
    rows = []
    for d in range(ds.n_views):
        for idx in stable[d]:
            i = int(idx)
            rows.append([
                d + 1, i, ds.var_names[d][i - 1],
                f"{freqs[d][i - 1]:.17g}", f"{effects[d][i - 1]:.17g}",
            ])
    manifest = {"command": "stability", "config": _manifest_cfg(cfg), "seed": cfg["seed"]}
    out = cfg["out"] or "stable.csv"
    _write_csv(sink.path(out), ["view", "index", "name", "frequency", "mean_effect"], rows, manifest)
    return EXIT_OK


def _manifest_cfg(cfg):
    # output location does not affect the computation; keep artifacts
    # byte-identical wherever they are written
    return {k: v for k, v in sorted(cfg.items()) if v is not None and k != "out"}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="sida",
        description="Sparse integrative discriminant analysis for multi-view data",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, with_labels=True):
        p.add_argument("--config", help="JSON file with option defaults")
        p.add_argument("--views", help="comma-separated view CSV paths")
        if with_labels:
            p.add_argument("--labels", help="labels CSV path")
        p.add_argument("--graphs", help="comma-separated edge-list TSVs (empty slots allowed)")
        p.add_argument("--method", help="per-view: sida|sidanet|covariate")
        p.add_argument("--rho", type=float, help="separation/association weight (default 0.5)")
        p.add_argument("--eta", type=float, help="smoothing/sparsity mix (default 0.5)")
        p.add_argument("--gamma", help="ridge: 'auto' or a number")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--out", help="output path or directory")

    p = sub.add_parser("simulate", help="generate synthetic multi-view data")
    p.add_argument("--config")
    p.add_argument("--scenario", help="S1|S2|S3|NET1|NET2")
    p.add_argument("--setting", type=int, help="1|2|3 (S scenarios)")
    p.add_argument("--dims", help="per-view variable counts, e.g. 300,300")
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.add_argument("--rho1", type=float)
    p.add_argument("--rho2", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("cv", help="cross-validated constraint-radius search")
    add_common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--random-frac", dest="random_frac", type=float)
    p.add_argument("--search", choices=["random", "grid"])
    p.add_argument("--spacing", choices=["log", "linear"])
    p.add_argument("--workers", type=int)

    p = sub.add_parser("fit", help="fit the sparse discriminant model")
    add_common(p)
    p.add_argument("--taus", help="comma-separated per-view radii")
    p.add_argument("--taus-from", dest="taus_from", help="chosen.json from cv")

    p = sub.add_parser("predict", help="classify new samples with a fitted model")
    add_common(p, with_labels=False)
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--separate", action="store_const", const=True, default=None,
                   help="also emit per-view separate-rule labels")

    p = sub.add_parser("evaluate", help="error, association and selection metrics")
    add_common(p)
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--truth", help="comma-separated per-view truth-index CSVs")

    p = sub.add_parser("stability", help="resampling-based stable variable selection")
    add_common(p)
    p.add_argument("--folds", type=int)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--random-frac", dest="random_frac", type=float)
    p.add_argument("--search", choices=["random", "grid"])
    p.add_argument("--spacing", choices=["log", "linear"])
    p.add_argument("--workers", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--freq-threshold", dest="freq_threshold", type=float)
    p.add_argument("--effect-percentile", dest="effect_percentile", type=float)

    return ap


OPTION_TABLES = {
    "simulate": [
        ("scenario", "S1", str),
        ("setting", 1, int),
        ("dims", "300,300", str),
        ("n_per_class", 80, int),
        ("rho1", None, float),
        ("rho2", None, float),
        ("c", None, float),
        ("seed", 0, int),
        ("out", None, str),
    ],
    "cv": COMMON_OPTS + [
        ("folds", 5, int),
        ("grid_points", None, int),
        ("random_frac", None, float),
        ("search", "random", str),
        ("spacing", "log", str),
        ("workers", 1, int),
    ],
    "fit": COMMON_OPTS + [
        ("taus", None, str),
        ("taus_from", None, str),
    ],
    "predict": COMMON_OPTS + [
        ("model", None, str),
        ("separate", False, _boolish),
    ],
    "evaluate": COMMON_OPTS + [
        ("model", None, str),
        ("truth", None, str),
    ],
    "stability": COMMON_OPTS + [
        ("folds", 5, int),
        ("grid_points", None, int),
        ("random_frac", None, float),
        ("search", "random", str),
        ("spacing", "log", str),
        ("workers", 1, int),
        ("reps", 20, int),
        ("freq_threshold", 0.6, float),
        ("effect_percentile", 0.01, float),
    ],
}

COMMANDS = {
    "simulate": cmd_simulate,
    "cv": cmd_cv,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "stability": cmd_stability,
}


def run(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    sink = ArtifactSink()
    try:
        cfg = config_resolve(args, OPTION_TABLES[args.command])
        cfg["command"] = args.command
        return COMMANDS[args.command](cfg, sink)
    except CliError as e:
        sink.cleanup()
        print(f"error code={e.slug} msg={e}", file=sys.stderr)
        return e.code
    except DataError as e:
        sink.cleanup()
        print(f"error code=validation msg={e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, GenerationError) as e:
        sink.cleanup()
        print(f"error code=numerical msg={e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        sink.cleanup()
        print(f"error code=io msg={e}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
