"""Command-line interface: ``electrogp <verb> [flags]``.

Settings come from flags, then from the ``[<verb>]`` table of an optional
TOML file given with ``--config``, then from built-in defaults. Exit codes:
0 success, 2 usage or validation error, 3 data-integrity error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import corp, inference, io, model, svgplot, synthetic
from ._backend import apply_thread_limit
from .embed import LleSettings
from .exceptions import DataIntegrityError, ElectroGPError, NumericalError, StageError
from .optim import ScgSettings

EXIT_OK, EXIT_USAGE, EXIT_INTEGRITY, EXIT_NUMERICAL = 0, 2, 3, 4

DEFAULTS = {
    "simulate": {"shape": "spiral", "n": 100, "noise_sd": 0.05},
    "fit": {
        "r": 1.0,
        "k_neighbors": list(model.DEFAULT_K_CANDIDATES),
        "max_iters": 500,
        "rel_tol": 1e-7,
        "grad_tol": 1e-6,
        "center": False,
        "no_prior": False,
    },
    "curve": {"n_mu": 512},
    "band": {"n_mu": 512, "eta": 0.95, "n1": 100, "n2": 50},
    "predict": {"method": "map", "n_samples": 5000, "burn_in": 1000},
    "sample-corp": {"n": 10, "r": 1.0},
    "plot": {"n_mu": 512},
}
# Verbs whose output depends on random draws; they refuse to run without a seed.
SEEDED = {"simulate", "band", "sample-corp"}


class UsageError(Exception):
    pass


def _settings(args, verb):
    """Merge flags over the config table over defaults."""
    cfg = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{args.config}: {exc}") from None
        cfg = {k.replace("-", "_"): v for k, v in doc.get(verb, {}).items()}
    merged = dict(DEFAULTS.get(verb, {}))
    merged.update(cfg)
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "verb", "func"):
            merged[key] = val
    if verb in SEEDED or (verb == "predict" and merged.get("method") == "mh"):
        if merged.get("seed") is None:
            raise UsageError(f"{verb} needs --seed (or 'seed' in the config file)")
    return merged


def _require(s, *keys):
    for k in keys:
        if s.get(k) is None:
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _load_data(path):
    if not Path(path).is_file():
        raise UsageError(f"data file not found: {path}")
    return io.read_csv(path)


def _load_model(s):
    _require(s, "model", "data")
    header, data = _load_data(s["data"])
    if not Path(s["model"]).is_file():
        raise UsageError(f"model file not found: {s['model']}")
    return header, data, io.load_model(s["model"], data)


# -- verbs -------------------------------------------------------------------------------


def cmd_simulate(s):
    _require(s, "out")
    if s["shape"] not in synthetic.SHAPES:
        raise UsageError(f"unknown shape {s['shape']!r}; choose from {', '.join(synthetic.SHAPES)}")
    ds = synthetic.simulate(s["shape"], int(s["n"]), float(s["noise_sd"]), seed=int(s["seed"]))
    io.write_csv(s["out"], io.default_header(2), ds.y)
    truth = s.get("truth") or str(Path(s["out"]).with_suffix("")) + ".truth.csv"
    io.write_csv(truth, ["t", "mu_1", "mu_2"], np.column_stack([ds.t, ds.clean]))
    print(f"wrote {ds.y.shape[0]} rows to {s['out']} and truth to {truth}")


def cmd_fit(s):
    _require(s, "data", "out")
    _, data = _load_data(s["data"])
    cfg = corp.CorpConfig(r=float(s["r"]))
    scg = ScgSettings(max_iters=int(s["max_iters"]), rel_tol=float(s["rel_tol"]), grad_tol=float(s["grad_tol"]))
    ks = s["k_neighbors"]
    ks = [int(k) for k in (ks if isinstance(ks, (list, tuple)) else [ks])]
    kwargs = dict(center=bool(s["center"]), use_prior=not s["no_prior"])
    if len(ks) == 1:
        m = model.fit(data, cfg, LleSettings(k_neighbors=ks[0]), scg, **kwargs)
    else:
        m = model.fit_best(data, ks, cfg, None, scg, **kwargs)
    io.save_model(m, s["out"])
    for key in ("initial", "hyperparameters", "joint"):
        print(f"{key:>16s} objective {m.stage_values[key]:.10g}")
    if "k_neighbors" in m.stage_values:
        print(f"{'chosen k':>16s} {m.stage_values['k_neighbors']}")
    print(f"final objective {m.objective_value:.10g}")


def cmd_curve(s):
    _require(s, "out")
    _, _, m = _load_model(s)
    io.write_curve(s["out"], inference.mean_curve(m, int(s["n_mu"])))


def cmd_band(s):
    _require(s, "out")
    eta = float(s["eta"])
    if not 0.0 < eta < 1.0:
        raise UsageError("--eta must lie strictly between 0 and 1")
    _, _, m = _load_model(s)
    curve = inference.mean_curve(m, int(s["n_mu"]))
    band = inference.uncertainty_band(m, curve, eta, int(s["n1"]), int(s["n2"]), seed=int(s["seed"]))
    summary = s.get("summary") or str(Path(s["out"]).with_suffix("")) + ".json"
    io.write_band(s["out"], summary, band)
    print(f"rho {band.rho:.10g} at eta {eta}")


def cmd_predict(s):
    _require(s, "input", "out")
    _, _, m = _load_model(s)
    if not Path(s["input"]).is_file():
        raise UsageError(f"input file not found: {s['input']}")
    _, partial = io.read_csv(s["input"], allow_missing=True)
    if partial.shape[1] != m.d:
        raise UsageError(f"input has {partial.shape[1]} columns, model has {m.d}")
    obs = [inference.PartialObservation(row) for row in partial]
    preds = inference.predict_records(
        m, obs, s["method"], int(s["n_samples"]), int(s["burn_in"]), seed=s.get("seed")
    )
    io.write_predictions(s["out"], list(zip(obs, preds)), m.d)


def cmd_sample_corp(s):
    xs = corp.sample(int(s["n"]), corp.CorpConfig(r=float(s["r"])), seed=int(s["seed"])).xs
    if s.get("out"):
        io.write_csv(s["out"], ["x"], xs[:, None])
    else:
        for v in xs:
            print(repr(float(v)))


def cmd_plot(s):
    _require(s, "out")
    _, data, m = _load_model(s)
    if data.shape[1] != 2:
        raise UsageError(
            f"plot handles 2-dimensional data only (got d={data.shape[1]}); use the curve/band CSV exports"
        )
    rho = 0.0
    if s.get("band"):
        rho = float(io.read_band_summary(s["band"])["rho"])
    curve = inference.mean_curve(m, int(s["n_mu"]))
    svgplot.write_svg(s["out"], data, curve.vertices, rho)


# -- parser ------------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="electrogp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log optimiser progress")
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="TOML file; settings are read from its [%s] table" % name)
        sp.set_defaults(func=func)
        return sp

    sp = verb("simulate", cmd_simulate, "generate a noisy synthetic curve dataset")
    sp.add_argument("--shape", choices=synthetic.SHAPES)
    sp.add_argument("--n", type=int)
    sp.add_argument("--noise-sd", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="data CSV")
    sp.add_argument("--truth", help="truth sidecar CSV (default: <out>.truth.csv)")

    sp = verb("fit", cmd_fit, "fit latent coordinates and hyperparameters")
    sp.add_argument("--data")
    sp.add_argument("--out", help="model JSON")
    sp.add_argument("--r", type=float)
    sp.add_argument("--k-neighbors", type=int, nargs="+", help="one k, or several to restart from and keep the best")
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--rel-tol", type=float)
    sp.add_argument("--grad-tol", type=float)
    sp.add_argument("--center", action="store_true", default=None, help="subtract column means before fitting")
    sp.add_argument("--no-prior", action="store_true", default=None, help="drop the repulsive prior (ablation)")

    for name, func, help_ in (
        ("curve", cmd_curve, "export the posterior mean curve"),
        ("band", cmd_band, "Monte-Carlo uncertainty band radius"),
        ("predict", cmd_predict, "latent coordinates and missing entries of new records"),
        ("plot", cmd_plot, "SVG of data, mean curve and band"),
    ):
        sp = verb(name, func, help_)
        sp.add_argument("--model")
        sp.add_argument("--data", help="training data CSV the model was fitted on")
        sp.add_argument("--out")
        if name in ("curve", "band", "plot"):
            sp.add_argument("--n-mu", type=int)
        if name == "band":
            sp.add_argument("--eta", type=float)
            sp.add_argument("--n1", type=int)
            sp.add_argument("--n2", type=int)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--summary", help="JSON summary (default: <out>.json)")
        if name == "predict":
            sp.add_argument("--input", help="CSV with empty fields for missing entries")
            sp.add_argument("--method", choices=("map", "mh"))
            sp.add_argument("--n-samples", type=int)
            sp.add_argument("--burn-in", type=int)
            sp.add_argument("--seed", type=int)
        if name == "plot":
            sp.add_argument("--band", help="band summary JSON")

    sp = verb("sample-corp", cmd_sample_corp, "draw points from the repulsive process on (0, 1)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    verbose = args.verbose
    del args.verbose
    try:
        apply_thread_limit()
        s = _settings(args, args.verb)
        args.func(s)
    except (UsageError, io.CsvFormatError, svgplot.PlotError) as exc:
        print(f"electrogp {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataIntegrityError as exc:
        print(f"electrogp {args.verb}: data integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (NumericalError, StageError) as exc:
        print(f"electrogp {args.verb}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ElectroGPError, ValueError, OSError) as exc:
        if verbose:
            raise
        print(f"electrogp {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
