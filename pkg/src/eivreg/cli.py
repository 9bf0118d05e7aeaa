"""Command-line front end: estimate, simulate, benchmark, calibrate, replay.

Every subcommand writes its artifacts atomically into ``--out`` together with
``manifest.json``, which records the fully resolved arguments and the SHA-256
of each output so ``replay`` can check bitwise reproduction.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .basis import QuadratureError
from .deconv import Dataset, QuadratureSpec
from .io import CsvFormatError, read_columns, read_json, sha256_file, write_csv, write_json
from .noise import KINDS, make_noise
from .riskbench import calibrate_kappa, mise, rate_slope
from .selector import EstimatorConfig, fit_regression
from .simlab import Scenario, default_smoothness, generate, predicted_rate, scenario_from_dict

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INPUT", "EXIT_NUMERIC", "EXIT_GATE"]

log = logging.getLogger("eivreg")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_GATE = 4

ORACLE_FACTOR = 3.0

_DEFAULTS = EstimatorConfig()


class InputError(ValueError):
    pass


class NumericFailure(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"numeric failure during {stage}: {exc}")


# ---------------------------------------------------------------- parsing

def _grid(text: str):
    try:
        lo, hi, pts = text.split(":")
        return float(lo), float(hi), int(pts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi:points") from None


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _add_config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("estimator configuration")
    g.add_argument("--kappa", type=float, default=_DEFAULTS.kappa)
    g.add_argument("--kappa-prime", type=float, default=_DEFAULTS.kappa_prime)
    g.add_argument("--kn", type=int, default=None,
                   help="coefficient truncation |j| <= kn (default: n, or n^1.5 for the regression fit)")
    g.add_argument("--practical-cap", action="store_true",
                   help="cap the regression truncation at max(n, 2^14) and allow --kn below the theory")
    g.add_argument("--trim-exponent", type=float, default=_DEFAULTS.trim_exponent)
    g.add_argument("--dim-step", type=float, default=_DEFAULTS.dim_step)
    g.add_argument("--quad-nodes", type=int, default=_DEFAULTS.quad.nodes)
    g.add_argument("--grid", type=_grid, default=_DEFAULTS.eval_region, help="evaluation grid lo:hi:points")


def _add_common(p: argparse.ArgumentParser, seed=True):
    p.add_argument("--out", required=True, help="output directory")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eivreg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="fit the regression from a y,z CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--noise", required=True, choices=KINDS)
    p.add_argument("--sigma", type=float, default=0.0)
    _add_config_flags(p)
    _add_common(p, seed=False)

    p = sub.add_parser("simulate", help="draw a dataset from a scenario JSON")
    p.add_argument("--scenario", required=True)
    _add_common(p)

    p = sub.add_parser("benchmark", help="Monte Carlo risks over a list of sample sizes")
    p.add_argument("--scenario", required=True)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--targets", default="density,ell,regression")
    p.add_argument("--gate", action="store_true",
                   help="exit 4 unless risks decrease in n and adaptive fits stay within 3x the oracle")
    _add_config_flags(p)
    _add_common(p)

    p = sub.add_parser("calibrate", help="sweep the penalty constants")
    p.add_argument("--scenario", required=True)
    p.add_argument("--kappa-grid", type=_float_list, required=True)
    p.add_argument("--reps", type=int, default=50)
    _add_config_flags(p)
    _add_common(p)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs bitwise")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def _config(args) -> EstimatorConfig:
    try:
        return EstimatorConfig(k_n=args.kn, quad=QuadratureSpec(args.quad_nodes), kappa=args.kappa,
                               kappa_prime=args.kappa_prime, trim_exponent=args.trim_exponent,
                               dim_step=args.dim_step, eval_region=tuple(args.grid),
                               practical_cap=args.practical_cap)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_scenarios(path) -> List[tuple]:
    """``[(name, Scenario)]`` from a JSON object or list of objects."""
    try:
        raw = read_json(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read scenario file {path}: {exc}") from None
    items = raw if isinstance(raw, list) else [raw]
    out = []
    for d in items:
        if not isinstance(d, dict):
            raise InputError("scenario entries must be JSON objects")
        s = scenario_from_dict(d)
        name = d.get("name") or f"{s.f}-{s.g}-{s.noise.kind}-{s.noise.sigma:g}"
        out.append((name, s))
    if not out:
        raise InputError("scenario file is empty")
    return out


# ---------------------------------------------------------------- manifest

def _manifest_args(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}
    for key in ("input", "scenario"):
        if d.get(key) is not None:
            d[key] = str(Path(d[key]).resolve())
    if isinstance(d.get("grid"), tuple):
        d["grid"] = list(d["grid"])
    return d


def _write_manifest(args, out: Path, outputs: List[Path], inputs=(), config=None) -> Path:
    man = {
        "subcommand": args.command,
        "version": __version__,
        "args": _manifest_args(args),
        "seed": getattr(args, "seed", None),
        "config": config.to_dict() if config is not None else None,
        "inputs": {str(Path(p).resolve()): sha256_file(p) for p in inputs},
        "outputs": {p.name: sha256_file(p) for p in outputs},
    }
    return write_json(out / "manifest.json", man)


# ---------------------------------------------------------------- commands

def cmd_estimate(args) -> int:
    try:
        noise = make_noise(args.noise, args.sigma)
    except ValueError as exc:
        raise InputError(f"invalid noise specification: {exc}") from None
    cfg = _config(args)
    cols = read_columns(args.input, ("y", "z"))
    data = Dataset(cols["z"], cols["y"])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = fit_regression(data, noise, cfg)
    except (ArithmeticError, QuadratureError) as exc:
        raise NumericFailure("regression fit", exc) from None
    out = Path(args.out)
    rows = []
    for target, diag in (("g", res.diag_g), ("ell", res.diag_ell)):
        for m, dim, c, p, t, sel in diag.rows():
            rows.append((target, m, dim, c, p, t, sel))
        for m, reason in sorted(diag.rejected.items()):
            rows.append((target, m, m * cfg.dim_step, "nan", "nan", "nan", "rejected"))
    diag_p = write_csv(out / "diagnostics.csv",
                       ("target", "m", "D_m", "contrast", "penalty", "total", "selected"), rows)
    est_p = write_csv(out / "estimates.csv", ("x", "g_tilde", "ell_tilde", "f_tilde"),
                      zip(res.grid, res.g_tilde, res.ell_tilde, res.f_tilde))
    _write_manifest(args, out, [diag_p, est_p], inputs=[args.input], config=cfg)
    print(f"selected D_g={res.m_hat_g.dim:g} D_ell={res.m_hat_ell.dim:g}; wrote {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenarios = _load_scenarios(args.scenario)
    if len(scenarios) != 1:
        raise InputError("simulate takes a single scenario")
    _, s = scenarios[0]
    sim = generate(s, args.seed)
    out = Path(args.out)
    data_p = write_csv(out / "data.csv", ("y", "z"), zip(sim.y, sim.z))
    x_p = write_csv(out / "hidden_x.csv", ("x",), ((v,) for v in sim.x_hidden))
    _write_manifest(args, out, [data_p, x_p], inputs=[args.scenario])
    print(f"wrote {s.n} rows to {data_p}")
    return EXIT_OK


def _with_smoothness(s: Scenario) -> Scenario:
    if s.smoothness is not None:
        return s
    from dataclasses import replace
    return replace(s, smoothness=default_smoothness(s.f, s.g))


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    if args.reps < 2:
        raise InputError("--reps must be at least 2")
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    for t in targets:
        if t not in ("density", "ell", "regression"):
            raise InputError(f"unknown target {t!r}")
    ns = sorted(set(args.n_list))
    if not ns or ns[0] < 3:
        raise InputError("--n-list needs sample sizes >= 3")
    rows, summary, failures = [], {"scenarios": {}}, []
    for name, s in _load_scenarios(args.scenario):
        s = _with_smoothness(s)
        entry = {}
        for target in targets:
            reports = []
            for n in ns:
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        rep = mise(s.with_n(n), cfg, target, args.reps, args.seed)
                except (RuntimeError, ArithmeticError) as exc:
                    raise NumericFailure(f"benchmark {name}/{target}/n={n}", exc) from None
                reports.append((n, rep))
                for d in sorted(rep.oracle):
                    rows.append((name, target, n, repr(float(d)), rep.oracle[d], rep.oracle_se[d]))
                rows.append((name, target, n, "adaptive", rep.mise, rep.se))
                if args.gate and rep.oracle:
                    best = rep.oracle_min()[1]
                    if rep.mise > ORACLE_FACTOR * best:
                        failures.append(f"{name}/{target}/n={n}: adaptive {rep.mise:.4g} > "
                                        f"{ORACLE_FACTOR:g} x oracle {best:.4g}")
            pred = predicted_rate(s, target).to_dict()
            t_entry = {"predicted_rate": pred,
                       "mise": {str(n): r.mise for n, r in reports},
                       "failures": {str(n): r.failures for n, r in reports}}
            if len(ns) >= 3:
                slope, icpt, resid = rate_slope(reports)
                t_entry["fitted_slope"] = {"slope": slope, "intercept": icpt, "residual": resid}
            else:
                t_entry["fitted_slope"] = None
                t_entry["slope_note"] = "insufficient n points"
            if target == "regression":
                t_entry["mean_ratio"] = {str(n): float(np.mean(r.extras["ratio"])) for n, r in reports}
                t_entry["trim_respected"] = all(bool(np.all(r.extras["sup_f"] <= r.extras["a_n"]))
                                                for _, r in reports)
            m = [r.mise for _, r in reports]
            if args.gate and any(b >= a for a, b in zip(m, m[1:])):
                failures.append(f"{name}/{target}: risk does not decrease along n={ns}")
            entry[target] = t_entry
        summary["scenarios"][name] = entry
    summary["gate_failures"] = failures if args.gate else None
    out = Path(args.out)
    csv_p = write_csv(out / "benchmark.csv", ("scenario", "target", "n", "m_or_adaptive", "mise", "se"), rows)
    sum_p = write_json(out / "summary.json", summary)
    _write_manifest(args, out, [csv_p, sum_p], inputs=[args.scenario], config=cfg)
    print(f"wrote {len(rows)} rows to {csv_p}")
    if failures:
        for f in failures:
            print(f"GATE FAIL {f}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    grid = args.kappa_grid
    if not grid:
        raise InputError("--kappa-grid is empty")
    if any(not k > 0 for k in grid):
        raise InputError("penalty constants must be positive")
    if args.reps < 2:
        raise InputError("--reps must be at least 2")
    named = _load_scenarios(args.scenario)
    scenarios = [s for _, s in named]
    rows, recs = [], {}
    for target, key in (("density", "kappa"), ("ell", "kappa_prime")):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cal = calibrate_kappa(scenarios, cfg, target, grid, args.reps, args.seed)
        except (RuntimeError, ArithmeticError) as exc:
            raise NumericFailure(f"calibration of {key}", exc) from None
        for i, (name, _) in enumerate(named):
            for k, kap in enumerate(cal.grid):
                rows.append((name, key, kap, cal.table[i, k], cal.se[i, k]))
        recs[key] = cal.recommended
        print(f"recommended {key} = {cal.recommended:g}")
        if cal.flat:
            print(f"warning: MISE varies by less than 10% across the {key} grid; "
                  "the recommendation is weakly identified")
    out = Path(args.out)
    csv_p = write_csv(out / "calibration.csv", ("scenario", "parameter", "value", "mise", "se"), rows)
    rec_p = write_json(out / "recommendation.json", recs)
    _write_manifest(args, out, [csv_p, rec_p], inputs=[args.scenario], config=cfg)
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        man = read_json(args.manifest)
        sub, recorded = man["subcommand"], man["args"]
        expected = man["outputs"]
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"unreadable manifest: {exc}") from None
    if sub == "replay":
        raise InputError("cannot replay a replay")
    argv = _argv_from_manifest(sub, recorded, args.out)
    code = main(argv)
    if code != EXIT_OK and code != EXIT_GATE:
        return code
    out = Path(args.out)
    bad = [name for name, digest in expected.items()
           if not (out / name).exists() or sha256_file(out / name) != digest]
    if bad:
        print(f"replay mismatch in {', '.join(sorted(bad))}", file=sys.stderr)
        return EXIT_GATE
    print(f"replay reproduced {len(expected)} files bitwise")
    return EXIT_OK


def _argv_from_manifest(sub: str, recorded: dict, out: str) -> List[str]:
    argv = [sub]
    for key, val in recorded.items():
        if key in ("command", "out") or val is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif key == "grid":
            argv.append(f"{flag}={':'.join(repr(v) for v in val)}")
        elif isinstance(val, list):
            argv.append(f"{flag}={','.join(repr(v) for v in val)}")
        else:
            argv.append(f"{flag}={repr(val) if isinstance(val, float) else val}")
    return argv + ["--out", out]


_COMMANDS = {"estimate": cmd_estimate, "simulate": cmd_simulate, "benchmark": cmd_benchmark,
             "calibrate": cmd_calibrate, "replay": cmd_replay}


def _join_grid(argv: List[str]) -> List[str]:
    # "--grid -2:2:201" would be read as a flag because the value starts with "-"
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--grid" and i + 1 < len(argv):
            out.append(f"--grid={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = _join_grid(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except NumericFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CsvFormatError as exc:
        print(f"error: malformed CSV {getattr(args, 'input', '')}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
