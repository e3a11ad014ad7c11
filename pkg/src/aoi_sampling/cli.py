"""Command-line front end.

Subcommands: ``solve`` (offline threshold), ``simulate`` (single seeded
run, optional trace CSV), ``experiment`` (repeated runs from a JSON
config), ``check-bounds`` (decay-envelope verification), and ``preset``
(emit the headline-figure configs). Exit status: 0 on success, 1 on
configuration errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

from aoi_sampling.delay_models import (
    DelayModel,
    MomentBounds,
    QuadratureError,
)
from aoi_sampling.offline_solver import SolverConfig, SolverNonConvergence, solve_fixed_point
from aoi_sampling.policies import make_policy
from aoi_sampling.experiment_harness import (
    TRACE_COLUMNS,
    ConfigError,
    ExperimentConfig,
    check_bounds,
    experiment_summary_dict,
    run_experiment,
    write_presets,
    PRESET_FRAMES,
    PRESET_REPS,
)
from aoi_sampling.sim_engine import run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

_MODEL_PARAM_NAMES = {
    "constant": ["d"],
    "uniform": ["a", "b"],
    "exponential": ["rate"],
    "lognormal": ["mu", "sigma"],
    "truncated_lognormal": ["mu", "sigma", "cap"],
}


class CliError(ConfigError):
    """Bad command line; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError(f"{message}\n{self.format_usage()}")


def parse_model(text: str) -> DelayModel:
    """Parse ``kind:v1,v2,...`` into a delay model, e.g. ``lognormal:1,1.5``."""
    kind, _, rest = text.partition(":")
    if kind == "empirical":
        raise CliError("empirical models are only supported through JSON configs")
    if kind not in _MODEL_PARAM_NAMES:
        raise CliError(f"unknown model kind {kind!r} in {text!r}")
    names = _MODEL_PARAM_NAMES[kind]
    parts = [p for p in rest.split(",") if p] if rest else []
    if len(parts) != len(names):
        raise CliError(f"model {kind} needs {len(names)} parameters {names}, got {parts}")
    try:
        params = {name: float(p) for name, p in zip(names, parts)}
    except ValueError as exc:
        raise CliError(f"bad model parameters in {text!r}: {exc}") from exc
    try:
        return DelayModel.from_spec({"kind": kind, **params})
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def parse_policy(text: str) -> dict:
    """Parse ``zero_wait``, ``threshold:G``, or ``online`` into a policy spec."""
    kind, _, rest = text.partition(":")
    if kind == "zero_wait":
        return {"kind": "zero_wait"}
    if kind in ("threshold", "fixed_threshold"):
        if not rest:
            raise CliError("threshold policy needs a value, e.g. threshold:3.0")
        return {"kind": "fixed_threshold", "gamma": float(rest)}
    if kind in ("online", "online_rm"):
        return {"kind": "online_rm"}
    raise CliError(f"unknown policy {text!r}")


def _bounds_from_args(args: argparse.Namespace, model: DelayModel) -> MomentBounds:
    given = [args.d_lb, args.d_ub, args.m_lb, args.m_ub]
    if any(v is not None for v in given):
        if any(v is None for v in given):
            raise CliError("give all of --d-lb --d-ub --m-lb --m-ub, or none")
        return MomentBounds(
            d_lb=args.d_lb, d_ub=args.d_ub, m_lb=args.m_lb, m_ub=args.m_ub, b=args.cap_bound
        )
    # default to the model's exact moments (the tightest valid bounds)
    m, m2 = model.mean(), model.second_moment()
    return MomentBounds(d_lb=m, d_ub=m, m_lb=m2, m_ub=m2, b=model.cap)


def _add_bounds_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d-lb", type=float, default=None, help="lower bound on mean delay")
    p.add_argument("--d-ub", type=float, default=None, help="upper bound on mean delay")
    p.add_argument("--m-lb", type=float, default=None, help="lower bound on delay second moment")
    p.add_argument("--m-ub", type=float, default=None, help="upper bound on delay second moment")
    p.add_argument("--cap-bound", type=float, default=None, help="claimed hard delay cap")


def build_parser() -> _Parser:
    parser = _Parser(prog="aoi-sampling", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute the optimal threshold for a known model")
    p_solve.add_argument("--model", required=True, help="model spec, e.g. lognormal:1,1.5")
    p_solve.add_argument("--cost", type=float, default=0.0, help="per-sample cost")
    p_solve.add_argument("--delta", type=float, default=1e-9, help="fixed-point stopping threshold")
    p_solve.add_argument("--max-iter", type=int, default=10_000)
    p_solve.add_argument("--gamma0", type=float, default=None, help="initial threshold guess")
    _add_bounds_flags(p_solve)

    p_sim = sub.add_parser("simulate", help="one seeded simulation run")
    p_sim.add_argument("--model", required=True)
    p_sim.add_argument("--policy", required=True, help="zero_wait | threshold:G | online")
    p_sim.add_argument("--frames", type=int, default=10_000)
    p_sim.add_argument("--cost", type=float, default=0.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--trace", type=Path, default=None, help="write per-frame trace CSV here")
    _add_bounds_flags(p_sim)

    p_exp = sub.add_parser("experiment", help="repeated runs from a JSON config")
    p_exp.add_argument("--config", type=Path, required=True)
    p_exp.add_argument("--out", type=Path, required=True, help="output directory")
    p_exp.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p_exp.add_argument("--frames", type=int, default=None, help="override config frame count")
    p_exp.add_argument("--reps", type=int, default=None, help="override config repetitions")

    p_chk = sub.add_parser("check-bounds", help="verify decay envelopes on a capped model")
    p_chk.add_argument("--config", type=Path, required=True)
    p_chk.add_argument("--out", type=Path, default=None, help="also write bound_check.json here")
    p_chk.add_argument("--jobs", type=int, default=None)

    p_pre = sub.add_parser("preset", help="emit headline experiment configs")
    p_pre.add_argument("name", choices=["fig3", "fig4"])
    p_pre.add_argument("--out", type=Path, required=True)
    p_pre.add_argument("--frames", type=int, default=PRESET_FRAMES)
    p_pre.add_argument("--reps", type=int, default=PRESET_REPS)
    return parser


def _cmd_solve(args: argparse.Namespace) -> int:
    model = parse_model(args.model)
    bounds = _bounds_from_args(args, model)
    result = solve_fixed_point(
        model,
        bounds,
        args.cost,
        SolverConfig(delta=args.delta, max_iter=args.max_iter, gamma0=args.gamma0),
    )
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    model = parse_model(args.model)
    bounds = _bounds_from_args(args, model)
    policy = make_policy(parse_policy(args.policy), bounds, args.cost)
    result = run(
        model, policy, args.frames, args.cost, args.seed, collect_trace=args.trace is not None
    )
    if args.trace is not None:
        assert result.trace is not None
        cum_l = cum_y = 0.0
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for rec in result.trace:
                cum_l += rec.l
                cum_y += rec.y
                writer.writerow(
                    [
                        rec.k,
                        repr(rec.d),
                        repr(rec.w),
                        repr(rec.l),
                        repr(rec.x),
                        repr(rec.y),
                        repr(rec.gamma),
                        repr(cum_y / cum_l),
                    ]
                )
    print(json.dumps(result.summary.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.frames is not None:
        overrides["frames"] = args.frames
    if args.reps is not None:
        overrides["reps"] = args.reps
    if overrides:
        spec = config.to_dict()
        spec.update(overrides)
        config = ExperimentConfig.from_dict(spec)
    result = run_experiment(config, out_dir=args.out, jobs=args.jobs)
    print(json.dumps(experiment_summary_dict(result), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_check_bounds(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_json(args.config)
    report = check_bounds(config, jobs=args.jobs)
    payload = report.to_dict()
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "bound_check.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(payload, indent=2, sort_keys=True))
    for chk in report.checks:
        status = "PASS" if chk.passed else "FAIL"
        print(f"{status} {chk.name} k={chk.k} lhs={chk.lhs:.6g} rhs={chk.rhs:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_preset(args: argparse.Namespace) -> int:
    paths = write_presets(args.name, args.out, frames=args.frames, reps=args.reps)
    for path in paths:
        print(path)
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
    "check-bounds": _cmd_check_bounds,
    "preset": _cmd_preset,
}


def cli(argv: Sequence[str] | None = None) -> int:
    """Run one CLI invocation and return the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, SolverNonConvergence) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
