"""Command-line entry point: ``dtfe <subcommand> [options]``.

Exit codes: 0 success, 1 a verification tolerance failed, 2 usage or
configuration error, 3 runtime error.  JSON reports embed the resolved
configuration and seed.  CSV written to ``--out`` gets a ``.json`` sidecar
holding the same information.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analytic, io
from .errors import ConfigError, DTFEError
from .estimators import (CORRECTIONS, GHOST_BOUNDARY, KernelParams, berman_diggle,
                         dtfe_evaluate, dtfe_field, field_rows, kernel_K,
                         total_mass)
from .geometry import Window, build_delaunay
from .montecarlo import (ExperimentSpec, efficiency_crossover, palm_statistics,
                         run_experiment)
from .pointprocess import intensity_from_config, sample_poisson
from .special import exp_integral_E1, exp_integral_E2
from .verify import SUITES, run_suite

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code, message, report=None):
        super().__init__(message)
        self.code = code
        self.report = report


# --------------------------------------------------------------------------
# Parsing helpers


def parse_floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def parse_window(value):
    """``lo,hi`` or ``x0,x1,y0,y1``, or a nested list from a config file."""
    if isinstance(value, list):
        vals = np.asarray(value, dtype=float).ravel().tolist()
    else:
        vals = parse_floats(value, "window")
    if len(vals) not in (2, 4):
        raise ConfigError(f"window needs 2 or 4 numbers, got {len(vals)}")
    try:
        return Window(np.reshape(vals, (-1, 2)))
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from None


def parse_intensity(value):
    """A rate (``20``), ``affine1d:a,b``, or a JSON object/dict."""
    if isinstance(value, dict):
        return value
    text = str(value).strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"intensity: {exc.msg} at column {exc.colno}") from None
    if text.startswith("affine1d:"):
        a, b = parse_floats(text.split(":", 1)[1], "intensity")
        return {"kind": "affine1d", "a": a, "b": b}
    try:
        return {"kind": "constant", "rate": float(text)}
    except ValueError:
        raise ConfigError(f"intensity: cannot parse {text!r}") from None


def _resolve(args, keys, defaults=None):
    """Merge ``--config`` values with explicit flags (flags win)."""
    cfg = dict(defaults or {})
    if getattr(args, "config", None):
        cfg.update(io.load_config(args.config))
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")


def _emit(args, report, csv_text=None):
    fmt = getattr(args, "format", None) or "json"
    if fmt == "csv" and csv_text is not None:
        if args.out:
            with open(args.out, "w", newline="", encoding="utf-8") as fh:
                fh.write(csv_text)
            with open(args.out + ".json", "w", encoding="utf-8") as fh:
                fh.write(io.dumps_json({k: v for k, v in report.items() if k != "result"}))
        else:
            sys.stdout.write(csv_text)
        return
    text = io.dumps_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(command, cfg, result, seed=None, status="ok"):
    return {"command": command, "config": cfg, "seed": seed, "status": status,
            "result": result}


# --------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args):
    cfg = _resolve(args, ["window", "intensity", "seed", "replicate"],
                   {"seed": 0, "replicate": 0})
    _require(cfg, "window", "intensity")
    window = parse_window(cfg["window"])
    cfg["window"] = window.bounds.tolist()
    cfg["intensity"] = parse_intensity(cfg["intensity"])
    intensity = intensity_from_config(cfg["intensity"], window)
    pattern = sample_poisson(window, intensity, int(cfg["seed"]), int(cfg["replicate"]))
    report = _report("simulate", cfg, {"points": pattern.points.tolist()}, int(cfg["seed"]))
    _emit(args, report, io.pattern_to_csv(pattern))
    return EXIT_OK


def _load_pattern(cfg):
    _require(cfg, "input")
    window = parse_window(cfg["window"]) if cfg.get("window") is not None else None
    if window is not None:
        cfg["window"] = window.bounds.tolist()
    return io.read_pattern_csv(cfg["input"], None), window


def cmd_tessellate(args):
    cfg = _resolve(args, ["input", "window", "ghosts", "seed"], {"seed": 0, "ghosts": False})
    pattern, window = _load_pattern(cfg)
    if cfg["ghosts"]:
        if window is None:
            raise ConfigError("--ghosts needs --window")
        pattern = pattern.with_points(window.vertices())
    tess = build_delaunay(pattern, jitter_seed=int(cfg["seed"]))
    result = tess.to_dict()
    result["points"] = tess.coords.tolist()
    result["ghost"] = tess.base.ghost.astype(int).tolist()
    rows = [[i, " ".join(map(str, c)), v] for i, (c, v) in
            enumerate(zip(tess.cells.tolist(), tess.cell_volume))]
    _emit(args, _report("tessellate", cfg, result, int(cfg["seed"])),
          io.rows_to_csv(["cell", "vertices", "volume"], rows))
    return EXIT_OK


def _query_points(cfg, window):
    if cfg.get("at") is not None:
        vals = parse_floats(cfg["at"], "at") if not isinstance(cfg["at"], list) else cfg["at"]
        return np.asarray(vals, dtype=float).reshape(-1, window.dim)
    if cfg.get("grid") is not None:
        n = int(cfg["grid"])
        axes = [np.linspace(lo, hi, n) for lo, hi in window.bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    return None


def cmd_estimate(args):
    cfg = _resolve(args, ["input", "window", "estimator", "bandwidth", "correction",
                          "at", "grid", "seed"],
                   {"estimator": "dtfe", "correction": GHOST_BOUNDARY, "seed": 0})
    pattern, window = _load_pattern(cfg)
    if window is None:
        raise ConfigError("--window is required")
    q = _query_points(cfg, window)
    est_name = cfg["estimator"]
    if est_name == "dtfe":
        est = dtfe_field(pattern, window, cfg["correction"], jitter_seed=int(cfg["seed"]))
        result = {"metadata": est.metadata(), "total_mass": total_mass(est)}
        if q is None:
            result["cells"] = [{"cell": i, "value": v, "volume": w}
                               for i, v, w in field_rows(est)]
            csv_text = io.field_to_csv(est)
        else:
            vals = np.atleast_1d(dtfe_evaluate(est, q[:, 0] if window.dim == 1 else q))
            result["values"] = vals.tolist()
            csv_text = io.grid_to_csv(q, vals)
    elif est_name in ("bd", "kernelK"):
        if cfg.get("bandwidth") is None:
            raise ConfigError(f"estimator {est_name} needs --bandwidth")
        if q is None:
            raise ConfigError("kernel estimators need --at or --grid")
        fn = berman_diggle if est_name == "bd" else kernel_K
        vals = np.atleast_1d(fn(pattern, window, q, KernelParams(float(cfg["bandwidth"]))))
        result = {"values": vals.tolist()}
        csv_text = io.grid_to_csv(q, vals)
    else:
        raise ConfigError(f"unknown estimator {est_name!r}")
    if q is not None:
        result["points"] = q.tolist()
    _emit(args, _report("estimate", cfg, result, int(cfg["seed"])), csv_text)
    return EXIT_OK


def cmd_analytic(args):
    kind = args.analytic_kind
    if kind == "special-table":
        cfg = _resolve(args, ["grid"], {"grid": "1e-6,50,50"})
        lo, hi, n = parse_floats(cfg["grid"], "grid")
        if not (0 < lo < hi) or n < 2:
            raise ConfigError("grid must be lo,hi,n with 0 < lo < hi and n >= 2")
        x = np.logspace(np.log10(lo), np.log10(hi), int(n))
        e1, e2 = exp_integral_E1(x), exp_integral_E2(x)
        result = {"x": x.tolist(), "E1": e1.tolist(), "E2": e2.tolist()}
        csv_text = io.rows_to_csv(["x", "E1", "E2"], zip(x, e1, e2))
        _emit(args, _report("analytic special-table", cfg, result), csv_text)
        return EXIT_OK
    if kind == "crossover":
        cfg = _resolve(args, ["dim", "rate", "bandwidth", "cd"], {"dim": 1})
        _require(cfg, "rate", "bandwidth")
        rec = efficiency_crossover(int(cfg["dim"]), float(cfg["rate"]),
                                   float(cfg["bandwidth"]), cfg.get("cd"))
        _emit(args, _report("analytic crossover", cfg, rec.to_dict()))
        return EXIT_OK
    cfg = _resolve(args, ["intensity", "w", "x0"])
    _require(cfg, "intensity", "w", "x0")
    cfg["intensity"] = parse_intensity(cfg["intensity"])
    w, x0 = float(cfg["w"]), float(cfg["x0"])
    intensity = intensity_from_config(cfg["intensity"], Window.interval(-w, w))
    if kind == "mean1d":
        terms = analytic.dtfe_mean_1d_terms(intensity, w, x0)
        result = {"mean": float(sum(terms)), "terms": list(terms)}
    else:
        terms = analytic.dtfe_second_moment_1d_terms(intensity, w, x0)
        second = float(sum(terms))
        mean = (intensity.rate if intensity.is_constant
                else analytic.dtfe_mean_1d_poisson(intensity, w, x0))
        result = {"second_moment": second, "mean": mean,
                  "variance": second - mean * mean, "terms": list(terms)}
    _emit(args, _report(f"analytic {kind}", cfg, result))
    return EXIT_OK


def cmd_experiment(args):
    cfg = _resolve(args, ["seed", "replicates"])
    kind = cfg.pop("kind", "moments")
    if kind == "palm":
        _require(cfg, "dim", "replicates")
        cfg.setdefault("seed", 0)
        cfg.setdefault("side", 40.0)
        cfg.setdefault("rate", 1.0)
        rep = palm_statistics(int(cfg["dim"]), int(cfg["replicates"]), float(cfg["side"]),
                              int(cfg["seed"]), float(cfg["rate"]))
        cfg["kind"] = "palm"
        result = rep.to_dict()
        if args.dump_replicates:
            with open(args.dump_replicates, "w", newline="", encoding="utf-8") as fh:
                fh.write(io.rows_to_csv(["inv_volume", "neighbour_sum"],
                                        zip(rep.inv_volume, rep.neighbour_sum)))
        _emit(args, _report("experiment", cfg, result, int(cfg["seed"])))
        return EXIT_OK
    if kind != "moments":
        raise ConfigError(f"experiment kind must be 'moments' or 'palm', got {kind!r}")
    if "window" in cfg and not isinstance(cfg["window"], list):
        cfg["window"] = parse_window(cfg["window"]).bounds.tolist()
    if "intensity" in cfg:
        cfg["intensity"] = parse_intensity(cfg["intensity"])
    spec = ExperimentSpec.from_config(cfg)
    report = run_experiment(spec, workers=args.threads or 1,
                            keep_replicates=bool(args.dump_replicates))
    out = report.to_dict()
    resolved = dict(out.pop("config"), kind="moments")
    if args.dump_replicates:
        header = [f"x0_{k}" for k in range(len(spec.x0))]
        rows = ([r] + list(v) for r, v in enumerate(report.replicate_values))
        with open(args.dump_replicates, "w", newline="", encoding="utf-8") as fh:
            fh.write(io.rows_to_csv(["replicate"] + header, rows))
    _emit(args, _report("experiment", resolved, out, spec.seed))
    return EXIT_OK


def cmd_verify(args):
    kwargs = {}
    if args.replicates is not None:
        if args.suite in ("mass", "specialfn", "geometry"):
            raise ConfigError(f"suite {args.suite!r} has no replicate count")
        kwargs["replicates"] = args.replicates
    if args.seed is not None and args.suite != "specialfn":
        kwargs["seed"] = args.seed
    cfg = {"suite": args.suite, **kwargs}
    try:
        checks = run_suite(args.suite, **kwargs)
    except DTFEError as exc:
        report = _report("verify", cfg, {"error": str(exc)}, kwargs.get("seed"), "error")
        raise _Fail(EXIT_RUNTIME, str(exc), report) from None
    passed = all(c.passed for c in checks)
    result = {"suite": args.suite, "passed": passed, "checks": [c.to_dict() for c in checks]}
    for c in checks:
        print(c.line(), file=sys.stderr)
    _emit(args, _report("verify", cfg, result, kwargs.get("seed"),
                        "ok" if passed else "tolerance_failure"))
    return EXIT_OK if passed else EXIT_TOLERANCE


# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with parameters (flags override it)")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--threads", type=int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="dtfe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="sample a Poisson pattern")
    s.add_argument("--window", help="lo,hi or x0,x1,y0,y1 (use --window=-5,5)")
    s.add_argument("--intensity", help="rate, affine1d:a,b or a JSON object")
    s.add_argument("--replicate", type=int, help="replicate index within the seed")
    s.set_defaults(func=cmd_simulate, default_format="csv")

    s = sub.add_parser("tessellate", parents=[common], help="Delaunay tessellation")
    s.add_argument("--input", help="pattern CSV with x[,y][,ghost] columns")
    s.add_argument("--window", help="window for ghost vertices")
    s.add_argument("--ghosts", action="store_true", default=None,
                   help="add window vertices as ghost points")
    s.set_defaults(func=cmd_tessellate, default_format="json")

    s = sub.add_parser("estimate", parents=[common], help="estimate the intensity")
    s.add_argument("--input", help="pattern CSV with x[,y][,ghost] columns")
    s.add_argument("--window", help="observation window")
    s.add_argument("--estimator", choices=("dtfe", "bd", "kernelK"), help="default dtfe")
    s.add_argument("--bandwidth", type=float, help="kernel radius h (bd, kernelK)")
    s.add_argument("--correction", choices=CORRECTIONS, help="DTFE edge correction")
    s.add_argument("--at", help="comma-separated evaluation coordinates")
    s.add_argument("--grid", type=int, help="evaluate on an n per axis grid")
    s.set_defaults(func=cmd_estimate, default_format="csv")

    s = sub.add_parser("analytic", help="closed-form and quadrature moments")
    asub = s.add_subparsers(dest="analytic_kind", required=True)
    for name in ("mean1d", "variance1d"):
        a = asub.add_parser(name, parents=[common])
        a.add_argument("--lambda", dest="intensity", help="rate, affine1d:a,b or JSON")
        a.add_argument("--w", type=float, help="window half-width")
        a.add_argument("--x0", type=float, help="evaluation point in [-w, w]")
        a.set_defaults(func=cmd_analytic, default_format="json")
    a = asub.add_parser("special-table", parents=[common], help="CSV of x, E1, E2")
    a.add_argument("--grid", help="lo,hi,n on a log scale")
    a.set_defaults(func=cmd_analytic, default_format="csv")
    a = asub.add_parser("crossover", parents=[common], help="BD versus DTFE efficiency")
    a.add_argument("--dim", type=int, choices=(1, 2), help="dimension (default 1)")
    a.add_argument("--rate", type=float, help="intensity")
    a.add_argument("--bandwidth", type=float, help="kernel radius h")
    a.add_argument("--cd", type=float, help="DTFE variance constant (default per dim)")
    a.set_defaults(func=cmd_analytic, default_format="json")

    s = sub.add_parser("experiment", parents=[common], help="replicated Monte Carlo run")
    s.add_argument("--replicates", type=int, help="override R from the config")
    s.add_argument("--dump-replicates", metavar="CSV", help="write per-replicate values")
    s.set_defaults(func=cmd_experiment, default_format="json")

    s = sub.add_parser("verify", parents=[common], help="run a named acceptance check")
    s.add_argument("suite", choices=sorted(SUITES))
    s.add_argument("--replicates", type=int, help="override the criterion's R (smoke runs)")
    s.set_defaults(func=cmd_verify, default_format="json")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"dtfe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _Fail as exc:
        if exc.report is not None:
            _emit(args, exc.report)
        print(f"dtfe: {exc}", file=sys.stderr)
        return exc.code
    except (DTFEError, ValueError, OSError) as exc:
        print(f"dtfe: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
