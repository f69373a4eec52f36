"""Command-line front end: ``twedge <subcommand> [flags]``.

Errors are reported on a single stderr line ``error: <Name>: <message>``;
usage errors exit with 2, computation errors with 1.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import experiments as ex
from .errors import TwEdgeError
from .model import (
    DEFAULT_PHI_BOUNDS,
    ModelSpec,
    RadiusLaw,
    builtin_model,
    builtin_sigma,
    make_population_spectrum,
    read_spectrum_file,
)
from .mp_law import EdgeParams, edge_params, validate_conditions
from .tw_reference import (
    CalibrationResult,
    GOE_METHODS,
    cache_path,
    goe_percentiles,
    load_calibration,
    onatski_critical,
    tw1_table,
)

BUILTINS = ("identity", "sigma1", "sigma2")
EXPERIMENTS = ("simulate", "table1", "test-size", "test-power", "calibrate-tw", "calibrate-onatski",
               "locallaw", "rigidity", "universality")
PROFILES = {
    "desk": {"reps": 2000, "cal_dim": 500, "cal_reps": 10_000},
    "heavy": {"reps": 10_000, "cal_dim": 3000, "cal_reps": 30_000},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.split(","):
        dE, eta = item.split(":")
        out.append((float(dE), float(eta)))
    return out


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--config", help="key = value model file (spectrum, phi, M, N, radius, seed)")
    g.add_argument("--builtin", choices=BUILTINS, help="builtin population spectrum")
    g.add_argument("--spectrum-file", help="file of 'value weight' lines")
    g.add_argument("--phi", type=float, help="aspect ratio M/N for a free-standing spectrum")
    g.add_argument("--M", type=int, help="dimension")
    g.add_argument("--N", type=int, help="sample size")
    g.add_argument("--radius", help="radius law: chi, pearson2, gamma, d1, d2 or atoms:a:w,...")


def _run_flags(p: argparse.ArgumentParser, *, calibration: bool = False) -> None:
    g = p.add_argument_group("run")
    g.add_argument("--seed", type=int, help="master seed (required)")
    g.add_argument("--reps", type=int, help="replicates (profile default)")
    g.add_argument("--workers", type=int, default=1, help="worker processes")
    g.add_argument("--profile", choices=tuple(PROFILES), default="desk")
    g.add_argument("--out-dir", help="write CSV and JSON summary here")
    if calibration:
        g.add_argument("--alpha", type=float, default=0.05)
        g.add_argument("--cal-dim", type=int, help="GOE dimension of the calibration")
        g.add_argument("--cal-reps", type=int, help="GOE replicates of the calibration")
        g.add_argument("--cal-seed", type=int, help="calibration seed (default: --seed)")
        g.add_argument("--goe-method", choices=GOE_METHODS, default="tridiagonal")
        g.add_argument("--cache-dir", help="calibration cache directory (default $TWEDGE_CACHE)")


def _subcommand(sub, name: str, **kwargs) -> argparse.ArgumentParser:
    p = sub.add_parser(name, **kwargs)
    # --json is accepted before or after the subcommand
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                   help="emit a JSON document on stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twedge", description="Edge statistics of elliptical sample covariance matrices.")
    parser.add_argument("--json", action="store_true", help="emit a JSON document on stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = _subcommand(sub, "edge", help="print c, lambda_plus, gamma and the condition margin")
    _model_flags(p)

    p = _subcommand(sub, "simulate", help="rescaled largest eigenvalue samples")
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--edge-from", help="JSON file from 'twedge --json edge' to use instead of recomputing")

    for name, helptext in (("table1", "empirical CDF at the TW1 table percentiles"),
                           ("rigidity", "edge rigidity over an N ladder"),
                           ("locallaw", "empirical vs deterministic Stieltjes transform near the edge")):
        p = _subcommand(sub, name, help=helptext)
        _model_flags(p)
        _run_flags(p)
        if name == "rigidity":
            p.add_argument("--ladder", type=_ints, default=[100, 200, 400], help="comma separated N values")
        if name == "locallaw":
            p.add_argument("--z-grid", type=_pairs, help="comma separated dE:eta pairs, z = lambda_+ + dE + i eta")
            p.add_argument("--eta", type=float, default=0.05, help="eta when --z-grid is absent")

    p = _subcommand(sub, "universality", help="KS distance between two radius laws")
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--radius-b", required=True, help="second radius law")
    p.add_argument("--seed-b", type=int, help="seed for the second law (default: seed + 1)")

    for name in ("test-size", "test-power"):
        p = _subcommand(sub, name, help=f"Onatski signal test: {name[5:]}")
        _model_flags(p)
        _run_flags(p, calibration=True)
        if name == "test-power":
            p.add_argument("--nu", type=_floats, default=[0.5, 4.0, 6.0], help="comma separated strengths")

    for name in ("calibrate-tw", "calibrate-onatski"):
        p = _subcommand(sub, name, help="GOE Monte Carlo calibration")
        p.add_argument("--seed", type=int, help="master seed (required)")
        p.add_argument("--dim", type=int, help="GOE dimension")
        p.add_argument("--reps", type=int, help="GOE replicates")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--profile", choices=tuple(PROFILES), default="desk")
        p.add_argument("--goe-method", choices=GOE_METHODS, default="tridiagonal")
        p.add_argument("--cache-dir", help="calibration cache directory (default $TWEDGE_CACHE)")
        if name == "calibrate-tw":
            p.add_argument("--probs", type=_floats, default=[p for _, p in tw1_table().points])
        else:
            p.add_argument("--alpha", type=float, default=0.05)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key] = value
    return out


def _merge_config(args: argparse.Namespace) -> None:
    """Fill unset flags from --config; flags always win."""
    if not getattr(args, "config", None):
        return
    conf = read_config_file(args.config)
    spectrum = conf.pop("spectrum", None)
    if spectrum and not args.builtin and not args.spectrum_file:
        if spectrum.lower() in BUILTINS:
            args.builtin = spectrum.lower()
        else:
            args.spectrum_file = str(Path(args.config).parent / spectrum)
    casts = {"phi": float, "M": int, "N": int, "radius": str, "seed": int}
    for key, value in conf.items():
        if key not in casts:
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None and hasattr(args, key):
            setattr(args, key, casts[key](value))


def _spectrum(args, M: int | None, phi: float):
    if args.builtin and args.spectrum_file:
        raise UsageError("give either --builtin or --spectrum-file, not both")
    if args.spectrum_file:
        return read_spectrum_file(args.spectrum_file)
    if not args.builtin:
        raise UsageError("a spectrum is required (--builtin or --spectrum-file)")
    if args.builtin == "identity":
        return make_population_spectrum([(1.0, 1.0)])
    if M is None:
        raise UsageError(f"--M is required for builtin {args.builtin}")
    return builtin_sigma(args.builtin, M, phi)


def model_from_args(args) -> ModelSpec:
    if args.M is None or args.N is None:
        raise UsageError("--M and --N are required")
    law = RadiusLaw.parse(args.radius or "chi")
    if args.spectrum_file:
        spectrum = _spectrum(args, args.M, args.M / args.N)
        return ModelSpec(M=args.M, N=args.N, spectrum=spectrum, radius=law)
    if not args.builtin:
        raise UsageError("a spectrum is required (--builtin or --spectrum-file)")
    return builtin_model(args.builtin, args.M, args.N, law)


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    return args.seed


def _reps(args, key: str = "reps") -> int:
    value = getattr(args, key, None)
    reps = PROFILES[args.profile][key] if value is None else value
    if reps < 1:
        raise UsageError(f"--{key.replace('_', '-')} must be >= 1")
    return reps


def _emit_table(result: ex.TableResult, args, out) -> None:
    if args.out_dir:
        result.write(args.out_dir)
    if args.json:
        out.write(result.summary() + "\n")
    else:
        out.write(result.to_csv())


def cmd_edge(args, out) -> None:
    if args.M is not None and args.N is not None:
        phi = args.M / args.N
    elif args.phi is not None:
        phi = args.phi
    else:
        raise UsageError("give --phi or both --M and --N")
    spectrum = _spectrum(args, args.M, phi)
    edge = edge_params(spectrum, phi)
    report = validate_conditions(spectrum, phi, DEFAULT_PHI_BOUNDS)
    doc = {**edge.as_dict(), "phi": phi, "phi_ok": report.phi_ok, "sigma_bounds_ok": report.sigma_bounds_ok}
    if args.json:
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        for key in ("c", "lambda_plus", "gamma", "margin"):
            out.write(f"{key}={doc[key]!r}\n")


def cmd_simulate(args, out) -> None:
    seed = _need_seed(args)
    spec = model_from_args(args)
    reps = _reps(args)
    if args.edge_from:
        edge = EdgeParams.from_dict(json.loads(Path(args.edge_from).read_text()))
    else:
        edge = edge_params(spec.spectrum, spec.phi)
    lam1 = ex.map_replicates_array(ex._largest_eigenvalue, reps, seed, spec, workers=args.workers)
    stat = ex.rescale_largest(lam1, edge, spec.N)
    if args.json:
        doc = {"model": spec.describe(), "edge": edge.as_dict(), "seed": seed,
               "lambda1": lam1.tolist(), "rescaled": stat.tolist()}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("replicate", "lambda1", "rescaled"))
        for i, (l, s) in enumerate(zip(lam1, stat)):
            w.writerow((i, repr(float(l)), repr(float(s))))
        text = buf.getvalue()
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        suffix = "json" if args.json else "csv"
        (Path(args.out_dir) / f"simulate_seed{seed}.{suffix}").write_text(text)
    out.write(text)


def _experiment_config(args, **extra) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(model=model_from_args(args), reps=_reps(args), master_seed=_need_seed(args),
                               workers=args.workers, **extra)


def _calibration(args, seed: int) -> CalibrationResult:
    prof = PROFILES[args.profile]
    dim = args.cal_dim or prof["cal_dim"]
    reps = args.cal_reps or prof["cal_reps"]
    cal_seed = seed if args.cal_seed is None else args.cal_seed
    return load_calibration(args.cache_dir, "onatski_ratio", dim, reps, cal_seed, args.goe_method)


def cmd_calibrate(args, out) -> None:
    seed = _need_seed(args)
    prof = PROFILES[args.profile]
    dim = args.dim or prof["cal_dim"]
    reps = args.reps or prof["cal_reps"]
    if args.command == "calibrate-tw":
        res = goe_percentiles(dim, reps, args.probs, seed, method=args.goe_method, workers=args.workers)
        kind = "tw_edge"
    else:
        res = onatski_critical(dim, reps, args.alpha, seed, method=args.goe_method, workers=args.workers)
        kind = "onatski_ratio"
    path = res.save(cache_path(args.cache_dir, kind, dim, reps, seed, args.goe_method))
    if args.json:
        doc = json.loads(res.to_json())
        doc["path"] = str(path)
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write("prob,value\n")
        for p, v in res.percentile_estimates:
            out.write(f"{p!r},{v!r}\n")


def cmd_experiment(args, out) -> None:
    cmd = args.command
    if cmd == "table1":
        result = ex.run_table1(_experiment_config(args))
    elif cmd == "rigidity":
        result = ex.run_rigidity(_experiment_config(args, n_ladder=args.ladder))
    elif cmd == "locallaw":
        grid = args.z_grid or [(0.0, args.eta)]
        result = ex.run_locallaw(_experiment_config(args, z_grid=grid))
    elif cmd == "universality":
        cfg_a = _experiment_config(args)
        law_b = RadiusLaw.parse(args.radius_b)
        seed_b = cfg_a.master_seed + 1 if args.seed_b is None else args.seed_b
        model_b = ModelSpec(cfg_a.model.M, cfg_a.model.N, cfg_a.model.spectrum, law_b, name=cfg_a.model.name)
        cfg_b = ex.ExperimentConfig(model_b, cfg_a.reps, seed_b, workers=args.workers)
        result = ex.run_universality(cfg_a, cfg_b)
    elif cmd in ("test-size", "test-power"):
        seed = _need_seed(args)
        cal = _calibration(args, seed)
        cfg = _experiment_config(args, alpha=args.alpha, calibration=cal)
        result = ex.run_size(cfg) if cmd == "test-size" else ex.run_power(cfg, args.nu)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown command {cmd}")
    _emit_table(result, args, out)


def dispatch(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        if hasattr(args, "builtin"):
            _merge_config(args)
        if args.command == "edge":
            cmd_edge(args, out)
        elif args.command == "simulate":
            cmd_simulate(args, out)
        elif args.command.startswith("calibrate"):
            cmd_calibrate(args, out)
        else:
            cmd_experiment(args, out)
    except UsageError as exc:
        err.write(f"error: UsageError: {exc}\n")
        return 2
    except (TwEdgeError, ValueError, OSError, ArithmeticError, LookupError) as exc:
        err.write(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
