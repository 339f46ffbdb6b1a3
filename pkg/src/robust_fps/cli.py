"""Command-line front end.

Subcommands: estimate, calibrate, diagnose, simulate, divergence.  The CLI
is a thin shell over the library; every number it emits is the value the
corresponding library call returns.

Exit codes: 0 success, 2 parse error (malformed CSV/JSON/flags), 3
validation error (model invariants, degenerate frames, non-PD matrices),
4 conflicting clipping flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataio
from .divergence import GaussianSpec, divergence, influence, symmetrized_divergence
from .errors import (
    DegenerateFrameError,
    DivergenceUndefinedError,
    EstimationError,
    ModelValidationError,
)
from .estimators import RobustConfig, robust_estimate
from .frame import classical_estimate
from .risk import calibrate_c, mse_closed_form
from .simulate import empirical_risk, write_result_csv, write_result_json

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_FLAG_CONFLICT = 4

SEED_ENV_VAR = "ROBUST_FPS_SEED"


def _add_frame_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--frame", required=True, help="frame CSV path")
    parser.add_argument(
        "--model", required=True, choices=sorted(dataio.CLI_MODEL_NAMES), help="model family"
    )
    parser.add_argument(
        "--sigma", type=float, default=1.0, help="scale for the ratio family (default 1)"
    )


def _load_frame(args):
    family = dataio.CLI_MODEL_NAMES[args.model]
    return dataio.read_frame_csv(args.frame, family, sigma=args.sigma)


def _model_dict(args) -> dict:
    out = {"family": dataio.CLI_MODEL_NAMES[args.model]}
    if args.model == "ratio":
        out["sigma"] = args.sigma
    return out


def cmd_estimate(args) -> int:
    if (args.c is None) == (args.max_excess is None):
        print("error: exactly one of --c and --max-excess is required", file=sys.stderr)
        return EXIT_FLAG_CONFLICT
    scaling = "paper_v" if args.scaling == "paper" else "chambers_sigma"
    if args.max_excess is not None and scaling != "paper_v":
        raise ModelValidationError("--max-excess calibration applies to the paper scaling only")
    frame = _load_frame(args)

    if args.max_excess is not None:
        if args.max_excess <= 0:
            raise ModelValidationError("--max-excess must be > 0")
        c = calibrate_c(frame, args.max_excess)
    else:
        if args.c < 0:
            raise ModelValidationError("--c must be >= 0")
        c = args.c

    robust = robust_estimate(frame, RobustConfig(c=c, scaling=scaling))
    classical = classical_estimate(frame)
    risk = None
    diagnostics = []
    if scaling == "paper_v":
        try:
            risk = mse_closed_form(frame, c)
        except DegenerateFrameError:
            risk = None
    try:
        diagnostics = influence(frame, args.lam)
    except DegenerateFrameError:
        diagnostics = []
    report = dataio.build_report(
        model=_model_dict(args),
        frame=frame,
        classical=classical,
        robust=robust,
        risk=risk,
        diagnostics=diagnostics,
        flag_c=c,
    )
    dataio.write_report(report, args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.max_excess <= 0:
        raise ModelValidationError("--max-excess must be > 0")
    frame = _load_frame(args)
    c = calibrate_c(frame, args.max_excess)
    print(f"{c:.12g}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    frame = _load_frame(args)
    diagnostics = influence(frame, args.lam)
    report = dataio.build_report(
        model=_model_dict(args),
        frame=frame,
        diagnostics=diagnostics,
        flag_c=args.c,
    )
    if args.out:
        dataio.write_report(report, args.out)
    else:
        json.dump(report, sys.stdout, indent=2)
        print()
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed_override = args.seed
    if seed_override is None:
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                seed_override = int(env)
            except ValueError:
                raise dataio.ConfigSchemaError(
                    "", f"environment {SEED_ENV_VAR}={env!r} is not an integer"
                ) from None
    config = dataio.read_sim_config(args.config, seed_override)
    result = empirical_risk(config)
    write_result_json(result, args.out_prefix + ".json")
    write_result_csv(result, args.out_prefix + ".csv")
    return EXIT_OK


def cmd_divergence(args) -> int:
    f1 = GaussianSpec(dataio.parse_vector(args.mu1), dataio.parse_matrix(args.cov1))
    f2 = GaussianSpec(dataio.parse_vector(args.mu2), dataio.parse_matrix(args.cov2))
    if args.symmetrized:
        value = symmetrized_divergence(f1, f2, args.lam)
    else:
        value = divergence(f1, f2, args.lam)
    print(repr(value))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-fps",
        description="Outlier-resistant estimation of finite population means",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="classical + robust estimates with risk and diagnostics")
    _add_frame_flags(p_est)
    p_est.add_argument("--c", type=float, default=None, help="clipping constant")
    p_est.add_argument("--max-excess", type=float, default=None, help="excess-risk budget")
    p_est.add_argument("--scaling", choices=["paper", "chambers"], default="paper")
    p_est.add_argument("--lambda", dest="lam", type=float, default=-0.5, help="divergence order")
    p_est.add_argument("--out", required=True, help="report JSON path")
    p_est.set_defaults(func=cmd_estimate)

    p_cal = sub.add_parser("calibrate", help="solve the clipping constant from an excess budget")
    _add_frame_flags(p_cal)
    p_cal.add_argument("--max-excess", type=float, required=True)
    p_cal.set_defaults(func=cmd_calibrate)

    p_diag = sub.add_parser("diagnose", help="per-unit influence diagnostics")
    _add_frame_flags(p_diag)
    p_diag.add_argument("--lambda", dest="lam", type=float, default=-0.5)
    p_diag.add_argument("--c", type=float, default=None, help="flag units with |r| > c")
    p_diag.add_argument("--out", default=None, help="report JSON path (stdout if omitted)")
    p_diag.set_defaults(func=cmd_diagnose)

    p_sim = sub.add_parser("simulate", help="Monte Carlo risk comparison")
    p_sim.add_argument("--config", required=True, help="sim config JSON path")
    p_sim.add_argument("--out-prefix", required=True, help="output prefix for .json/.csv")
    p_sim.add_argument(
        "--seed", type=int, default=None,
        help=f"seed override (precedence: flag > {SEED_ENV_VAR} > config)",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_div = sub.add_parser("divergence", help="power divergence between two normals")
    p_div.add_argument("--mu1", required=True, help="mean vector, comma separated or @file")
    p_div.add_argument("--cov1", required=True, help="covariance rows ';' separated or @file")
    p_div.add_argument("--mu2", required=True)
    p_div.add_argument("--cov2", required=True)
    p_div.add_argument("--lambda", dest="lam", type=float, required=True)
    p_div.add_argument("--symmetrized", action="store_true")
    p_div.set_defaults(func=cmd_divergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (dataio.CsvFormatError, dataio.ConfigSchemaError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ModelValidationError, DegenerateFrameError, DivergenceUndefinedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EstimationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
