"""Command-line front end: ``wbirkhoff <subcommand> [options]``.

Every run writes ``manifest.json`` with the resolved configuration. Passing
that file back through ``--config`` reproduces the outputs byte for byte.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import error_curve, log_grid, weighted_average, weighted_average_continuous
from .diophantine import continued_fraction, rotation_from_quotients, small_divisor_scan
from .dynamics import (BENCHMARK_RHO, GOLDEN_MEAN, FlowSampler, OrbitObservable, PeriodicTable, Recorded,
                       Rotation, TrigPoly, benchmark_signal, read_csv_samples)
from .exceptions import WBirkhoffError
from .fourier import FourierRequest, fourier_spectrum
from .periodic import periodic_weighted_error
from .ratefit import classify_orbit, fit_rate
from .stochastic import (Distribution, WeightedSumSampler, clt_results_csv, weighted_clt_distance,
                         weighted_lln_check, weighted_slln_trajectory)
from .weights import WeightKind, parse_weight

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

BENCHMARK_WEIGHTS = "bump:p=0.5,q=0.5;bump:p=1,q=1;bump:p=1,q=2;bump:p=2,q=2"
NAMED_ROTATIONS = {"golden": GOLDEN_MEAN, "fig5": BENCHMARK_RHO, "sqrt2": math.sqrt(2.0) - 1.0}
FLOWS = {"cos2pi": lambda t: np.cos(2.0 * np.pi * t), "sin2pi": lambda t: np.sin(2.0 * np.pi * t)}


class ConfigError(Exception):
    pass


# -- value parsers ---------------------------------------------------------------

def parse_grid(text):
    """``lo:hi:log|lin[:count]``. ``log`` without a count gives one point per octave."""
    parts = text.split(":")
    if len(parts) not in (3, 4) or parts[2] not in ("log", "lin"):
        raise ConfigError(f"grid must look like lo:hi:log|lin[:count], got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
        count = int(parts[3]) if len(parts) == 4 else None
    except ValueError as exc:
        raise ConfigError(f"non-integer grid bound in {text!r}") from exc
    if not 2 <= lo < hi or (count is not None and count < 2):
        raise ConfigError(f"grid needs 2 <= lo < hi and count >= 2, got {text!r}")
    if parts[2] == "lin":
        return np.arange(lo, hi + 1) if count is None else np.unique(np.round(np.linspace(lo, hi, count)).astype(np.int64))
    if count is None:
        return log_grid(lo, hi, 1)
    return np.unique(np.round(np.geomspace(lo, hi, count)).astype(np.int64))


def parse_int_list(text):
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise ConfigError("empty integer list")
    return values


def parse_rotation(text):
    comps = []
    for item in str(text).replace(";", ",").split(","):
        item = item.strip()
        if item in NAMED_ROTATIONS:
            comps.append(NAMED_ROTATIONS[item])
        else:
            try:
                comps.append(float(Fraction(item)))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad rotation component {item!r}") from exc
    return Rotation(tuple(comps))


def parse_floats(text):
    try:
        return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected numbers, got {text!r}") from exc


def parse_signal(text):
    """Signal mini-language: const:c | periodic:v1,... | fig5 (the benchmark orbit) | orbit:file.json,rho=..,theta0=..
    | csv:file | flow:cos2pi,h=..."""
    head, _, rest = text.partition(":")
    if head == "fig5" and not rest:
        return benchmark_signal()
    if head == "const":
        return PeriodicTable(parse_floats(rest))
    if head == "periodic":
        values = parse_floats(rest)
        if not values:
            raise ConfigError("periodic signal needs at least one value")
        return PeriodicTable(values)
    if head == "csv":
        return Recorded(read_csv_samples(rest))
    if head in ("orbit", "flow"):
        name, *opts = rest.split(",")
        kw = {}
        for opt in opts:
            key, sep, val = opt.partition("=")
            if not sep:
                raise ConfigError(f"expected key=value in signal options, got {opt!r}")
            kw[key.strip()] = val.strip()
        if head == "flow":
            if name not in FLOWS:
                raise ConfigError(f"unknown flow {name!r}; known: {', '.join(sorted(FLOWS))}")
            return FlowSampler(FLOWS[name], float(kw.get("h", 1e-3)))
        poly = TrigPoly.from_json(Path(name).read_text())
        rho = parse_rotation(kw.get("rho", "golden"))
        return OrbitObservable(poly, rho, _phase(kw.get("theta0", "0"), rho.dimension))
    raise ConfigError(f"unknown signal {text!r}")


def _phase(text, d):
    theta0 = tuple(parse_floats(text))
    return theta0 * d if len(theta0) == 1 else theta0


def parse_fraction(text):
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"expected a number or ratio, got {text!r}") from exc


# -- option tables -----------------------------------------------------------------
# name -> (parser, default, help); None defaults mean "not set".

COMMON = {
    "weight": (str, "bump:p=1,q=1", "weight spec: bump:p=..,q=.. | dexp | sin2 | uniform"),
    "N": (str, None, "number of steps (comma list for clt)"),
    "grid": (str, None, "N grid lo:hi:log|lin[:count]"),
    "seed": (int, 0, "random seed"),
    "threads": (int, None, "worker threads (default: all cores)"),
    "precision": (str, "standard", "standard | extended"),
}

COMMANDS = {
    "average": ("weighted average of a signal; errors.csv with --grid", {
        "signal": (str, None, "signal expression"),
        "reference": (float, None, "exact mean for the error curve"),
    }),
    "converge": ("error curves and rate fits over several weights", {
        "weight": (str, BENCHMARK_WEIGHTS, "';'-separated weight specs"),
        "signal": (str, "fig5", "signal expression"),
        "reference": (float, None, "exact mean (defaults to the signal's own)"),
    }),
    "fourier": ("Fourier coefficients of a torus parameterization from its orbit", {
        "signal": (str, None, "orbit:file.json,... or csv:file (then --rho, --theta0)"),
        "rho": (str, None, "rotation for csv orbits (comma list, or golden/fig5/sqrt2)"),
        "theta0": (str, "0", "initial phase for csv orbits"),
        "max_order": (int, 5, "largest ||s||_1 extracted"),
        "zeta": (str, None, "budget exponent (default 9/10 of the admissible limit)"),
        "kappa": (float, 0.5, "effective-order safety factor"),
    }),
    "periodic": ("trigonometric interpolation and periodic convergence", {
        "signal": (str, None, "periodic:v1,v2,... or const:c"),
    }),
    "classify": ("regular / chaotic verdict for a signal", {
        "signal": (str, None, "signal expression"),
    }),
    "scan": ("continued fraction and small-divisor scan of a rotation", {
        "rho": (str, None, "rotation (comma list, or golden/fig5/sqrt2)"),
        "quotients": (str, None, "build the rotation from partial quotients instead"),
        "kmax": (int, 1000, "scan bound: k (d = 1) or ||k||_1 (d >= 2)"),
        "depth": (int, 20, "continued-fraction depth"),
    }),
    "clt": ("Monte Carlo weighted CLT / SLLN / LLN experiments", {
        "mode": (str, "clt", "clt | slln | lln"),
        "dist": (str, "uniform_sym", "gaussian | uniform_sym | rademacher | student_t:df | cauchy | const:c"),
        "trials": (int, 100000, "Monte Carlo trials"),
        "mu": (float, 2.0, "moment exponent (slln)"),
        "epsilon": (float, 0.1, "tolerance (lln)"),
    }),
}

_NOT_IN_MANIFEST = {"out", "config", "json", "threads"}


def build_parser():
    parser = argparse.ArgumentParser(prog="wbirkhoff", description="Weighted Birkhoff averaging experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, options) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        for key, (_, default, hlp) in {**COMMON, **options}.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None,
                           help=hlp + (f" (default {default})" if default is not None else ""))
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--config", default=None, help="key=value file or a previous manifest.json")
        p.add_argument("--json", action="store_true", help="print a JSON summary on stdout")
    return parser


def read_config(path):
    """Flat ``key=value`` lines (``#`` comments), or a manifest written by an earlier run."""
    text = Path(path).read_text()
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        if "config" in data:
            return {**data["config"], "command": data.get("command")}
        return data
    config = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        config[key.strip().replace("-", "_")] = value.strip()
    return config


def resolve(args):
    """Merge built-in defaults, the config file and explicit flags (flags win)."""
    options = {**COMMON, **COMMANDS[args.command][1]}
    from_file = read_config(args.config) if args.config else {}
    written_for = from_file.pop("command", None)
    if written_for and written_for != args.command:
        raise ConfigError(f"config was written for {written_for!r}, not {args.command!r}")
    unknown = set(from_file) - set(options)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for key, (conv, default, _) in options.items():
        raw = getattr(args, key)
        if raw is None:
            raw = from_file.get(key)
        if raw is None:
            raw = default
        if raw is None:
            resolved[key] = None
            continue
        try:
            resolved[key] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if resolved["precision"] not in ("standard", "extended"):
        raise ConfigError(f"precision must be standard or extended, got {resolved['precision']!r}")
    return resolved


# -- output helpers ------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


class Outputs:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name, text):
        (self.dir / name).write_text(text)


def _single_n(cfg, required=True):
    if cfg["N"] is None:
        if required:
            raise ConfigError("--N is required")
        return None
    values = parse_int_list(cfg["N"])
    if len(values) != 1:
        raise ConfigError("this subcommand takes a single --N")
    return values[0]


def _grid(cfg):
    return None if cfg["grid"] is None else parse_grid(cfg["grid"])


def _require(cfg, key):
    if cfg[key] is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


def _curve_csv(curve, label=None):
    if label is None:
        return curve.to_csv()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for n, e, f in zip(curve.n_grid, curve.errors, curve.floor_flag):
        writer.writerow([label, int(n), repr(float(e)), int(bool(f))])
    return buf.getvalue()


def _fit_summary(fit):
    return {"model": fit.model, "c": fit.c, "zeta_or_m": fit.zeta_or_m, "r2": fit.r_squared,
            "floor_truncated": fit.floor_truncated, "n_range": list(fit.n_range_used)}


# -- subcommands ---------------------------------------------------------------------

def cmd_average(cfg, out):
    spec = parse_weight(cfg["weight"])
    signal = parse_signal(_require(cfg, "signal"))
    grid = _grid(cfg)
    n = _single_n(cfg, required=grid is None)
    n = int(grid[-1]) if n is None else n
    summary = {"N": n, "weight": spec.to_string()}
    if isinstance(signal, FlowSampler):
        res = weighted_average_continuous(signal, spec, n * signal.step, signal.step)
        summary.update(value=res.value, quadrature_error=res.quadrature_error)
    else:
        summary["value"] = weighted_average(signal, spec, n, cfg["precision"])
    if grid is not None:
        if isinstance(signal, FlowSampler):
            raise ConfigError("--grid is not supported for flow signals")
        reference = cfg["reference"] if cfg["reference"] is not None else signal.reference
        if reference is None:
            raise ConfigError("this signal has no known mean; pass --reference")
        curve = error_curve(signal, spec, grid, reference, cfg["precision"], n_jobs=cfg["threads"])
        out.write("errors.csv", curve.to_csv())
        summary["reference"] = curve.reference
    out.write("value.json", dump_json(summary))
    return summary


def cmd_converge(cfg, out):
    signal = parse_signal(cfg["signal"])
    grid = _grid(cfg)
    grid = log_grid(8, 16384, 8) if grid is None else grid
    specs = [parse_weight(w) for w in cfg["weight"].split(";") if w.strip()]
    reference = cfg["reference"] if cfg["reference"] is not None else signal.reference
    if reference is None:
        raise ConfigError("this signal has no known mean; pass --reference")
    rows = io.StringIO()
    rows.write("weight,N,error,floor_flag\n")
    fits = {}
    for spec in specs:
        curve = error_curve(signal, spec, grid, reference, cfg["precision"], n_jobs=cfg["threads"])
        rows.write(_curve_csv(curve, spec.to_string()))
        # the N/log N candidate is only meaningful for the double-exponential weight
        fit = fit_rate(curve, include_nlogn=spec.kind is WeightKind.DOUBLE_EXP)
        fits[spec.to_string()] = _fit_summary(fit)
    out.write("errors.csv", rows.getvalue())
    summary = {"fits": fits}
    out.write("value.json", dump_json(summary))
    return summary


def cmd_fourier(cfg, out):
    spec = parse_weight(cfg["weight"])
    n = _single_n(cfg)
    signal = parse_signal(_require(cfg, "signal"))
    if isinstance(signal, OrbitObservable):
        rho, theta0 = signal.rotation, signal.theta0
    elif isinstance(signal, Recorded):
        rho = parse_rotation(_require(cfg, "rho"))
        theta0 = _phase(cfg["theta0"], rho.dimension)
    else:
        raise ConfigError("fourier needs an orbit:... or csv:... signal")
    orbit = signal.samples(n)
    req = FourierRequest(orbit, rho, theta0, spec, precision=cfg["precision"])
    zeta = None if cfg["zeta"] is None else parse_fraction(cfg["zeta"])
    res = fourier_spectrum(req, cfg["max_order"], zeta, cfg["kappa"], n_jobs=cfg["threads"])
    out.write("spectrum.csv", res.to_csv())
    summary = {"N": n, "budget": res.budget, "residual": res.residual,
               "effective_modes": int(np.sum(res.effective)), "modes": len(res.modes)}
    out.write("value.json", dump_json(summary))
    return summary


def cmd_periodic(cfg, out):
    spec = parse_weight(cfg["weight"])
    signal = parse_signal(_require(cfg, "signal"))
    if not isinstance(signal, PeriodicTable) or signal.value_dim != 1:
        raise ConfigError("periodic needs a periodic:... or const:... signal")
    res = periodic_weighted_error(signal.values[:, 0], spec, _grid(cfg), cfg["precision"])
    out.write("interp.json", res.interp.to_json() + "\n")
    out.write("errors.csv", res.curve.to_csv())
    summary = {"a0": res.interp.a0, "fit": _fit_summary(res.fit), "zeta_theory": res.zeta_theory}
    out.write("value.json", dump_json(summary))
    return summary


def cmd_classify(cfg, out):
    spec = parse_weight(cfg["weight"])
    signal = parse_signal(_require(cfg, "signal"))
    verdict = classify_orbit(signal, spec, _grid(cfg))
    out.write("proxy.csv", verdict.proxy.to_csv())
    summary = {"label": verdict.label, "evidence": _fit_summary(verdict.evidence)}
    out.write("value.json", dump_json(summary))
    return summary


def cmd_scan(cfg, out):
    if cfg["quotients"] is not None:
        rho, truncated = rotation_from_quotients(parse_int_list(cfg["quotients"]))
    else:
        rho, truncated = parse_rotation(_require(cfg, "rho")), False
    summary = {"rho": list(rho.components), "truncated": truncated}
    if rho.dimension == 1 and 0.0 < rho.components[0]:
        quotients, exact = continued_fraction(rho.components[0], cfg["depth"])
        summary.update(continued_fraction=quotients, exact_flag=exact)
    scan = small_divisor_scan(rho, cfg["kmax"])
    out.write("scan.csv", scan.to_csv())
    summary.update(json.loads(scan.to_json()))
    summary["record_k"] = scan.records[0].tolist()
    out.write("value.json", dump_json(summary))
    return summary


def parse_distribution(text):
    head, _, arg = text.partition(":")
    simple = {"gaussian": Distribution.gaussian, "uniform_sym": Distribution.uniform_sym,
              "rademacher": Distribution.rademacher, "cauchy": Distribution.cauchy,
              "zero": Distribution.zero}
    if head in simple and not arg:
        return simple[head]()
    if head == "student_t":
        return Distribution.student_t(float(arg))
    if head == "const":
        return Distribution.constant(float(arg))
    raise ConfigError(f"unknown distribution {text!r}")


def cmd_clt(cfg, out):
    spec = parse_weight(cfg["weight"])
    dist = parse_distribution(cfg["dist"])
    mode = cfg["mode"]
    if mode == "slln":
        grid = _grid(cfg)
        if grid is None:
            grid = np.array(parse_int_list(_require(cfg, "N")))
        traj = weighted_slln_trajectory(WeightedSumSampler(dist, spec, int(grid[0]), cfg["seed"]), cfg["mu"], grid)
        buf = io.StringIO()
        buf.write("N,scaled,log_scaled\n")
        for n, a, b in zip(traj.n_grid, traj.scaled, traj.log_scaled):
            buf.write(f"{int(n)},{float(a)!r},{float(b)!r}\n")
        out.write("slln.csv", buf.getvalue())
        summary = {"sigma": traj.sigma, "final_scaled": traj.scaled[-1], "final_log_scaled": traj.log_scaled[-1]}
    elif mode in ("clt", "lln"):
        grid = _grid(cfg)
        ns = [int(v) for v in grid] if grid is not None else parse_int_list(_require(cfg, "N"))
        if mode == "clt":
            results = [weighted_clt_distance(WeightedSumSampler(dist, spec, n, cfg["seed"]), cfg["trials"],
                                             n_jobs=cfg["threads"]) for n in ns]
            out.write("clt.csv", clt_results_csv(results))
            summary = {"distance": {str(r.n_terms): r.distance for r in results},
                       "dkw_bound": results[0].dkw_bound,
                       "outside_hypothesis": results[0].outside_hypothesis}
        else:
            probs = [weighted_lln_check(WeightedSumSampler(dist, spec, n, cfg["seed"]), cfg["epsilon"],
                                        cfg["trials"], n_jobs=cfg["threads"]) for n in ns]
            buf = io.StringIO()
            buf.write("N,epsilon,probability,trials,seed\n")
            for n, pr in zip(ns, probs):
                buf.write(f"{n},{cfg['epsilon']!r},{pr!r},{cfg['trials']},{cfg['seed']}\n")
            out.write("lln.csv", buf.getvalue())
            summary = {"probability": {str(n): pr for n, pr in zip(ns, probs)}}
    else:
        raise ConfigError(f"mode must be clt, slln or lln, got {mode!r}")
    out.write("value.json", dump_json(summary))
    return summary


HANDLERS = {"average": cmd_average, "converge": cmd_converge, "fourier": cmd_fourier,
            "periodic": cmd_periodic, "classify": cmd_classify, "scan": cmd_scan, "clt": cmd_clt}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        if cfg["threads"] is None:
            cfg["threads"] = os.cpu_count() or 1
        out = Outputs(args.out)
        manifest = {"command": args.command, "version": __version__,
                    "config": {k: v for k, v in cfg.items() if k not in _NOT_IN_MANIFEST}}
        out.write("manifest.json", dump_json(manifest))
        summary = HANDLERS[args.command](cfg, out)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"wbirkhoff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WBirkhoffError as exc:
        code = EXIT_NUMERIC if isinstance(exc, ArithmeticError) else EXIT_CONFIG
        kind = "numerical failure" if code == EXIT_NUMERIC else "configuration error"
        print(f"wbirkhoff: {kind}: {exc}", file=sys.stderr)
        return code
    except (ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"wbirkhoff: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.json:
        sys.stdout.write(dump_json({"command": args.command, **summary}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
