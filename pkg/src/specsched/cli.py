"""Command-line front end.

Exit codes: 0 success, 2 config validation failure, 3 instance too large.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import experiments
from .config import ConfigError, ExperimentConfig, load
from .model import Mode
from .policy import (
    InstanceTooLarge,
    PolicyKind,
    _evaluate,
    greedy_action,
    solve_cached,
)
from .sim import SimConfig, estimate

log = logging.getLogger("specsched")

EXIT_CONFIG = 2
EXIT_GUARD = 3


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="")


def _json(record: dict) -> str:
    return json.dumps(record, indent=2) + "\n"


def _load(args) -> ExperimentConfig:
    try:
        cfg = load(args.config)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}") from None
    return cfg.with_overrides(
        policy=args.policy, mode=args.mode, seed=args.seed, trajectories=args.trajectories
    )


def _channel(a):
    return None if a is None else a + 1  # channels are reported 1-based


def exact_value(exp: ExperimentConfig):
    """(value, first action or None, number of memoized states)."""
    model, initial = exp.model(), exp.initial_state()
    spec = exp.policy_spec()
    if spec.kind == PolicyKind.OPTIMAL:
        value, table = solve_cached(model, initial, spec.mode)
        return value, _channel(table.action(initial)), len(table)
    value, memo = _evaluate(spec, model, initial)
    first = _channel(greedy_action(initial, model)) if spec.kind == PolicyKind.GREEDY else None
    return value, first, len(memo)


def cmd_solve(args) -> int:
    exp = _load(args)
    t0 = time.perf_counter()
    value, first, n_states = exact_value(exp)
    log.info("solve: %d states in %.2fs", n_states, time.perf_counter() - t0)
    record = {
        "policy": exp.policy,
        "mode": exp.mode,
        "value": value,
        "best_action": first,
        "states": n_states,
        "config": exp.to_dict(),
    }
    _emit(_json(record), args.out or exp.output)
    return 0


def cmd_simulate(args) -> int:
    exp = _load(args)
    t0 = time.perf_counter()
    result = estimate(SimConfig(exp.trajectories, exp.seed, exp.model(),
                                exp.initial_state(), exp.policy_spec()))
    log.info("simulate: %d trajectories in %.2fs", result.n, time.perf_counter() - t0)
    try:
        dp_value = exact_value(exp)[0]
    except InstanceTooLarge:
        dp_value = None
    sigma = None
    if dp_value is not None and result.std_error > 0:
        sigma = (result.mean - dp_value) / result.std_error
    record = {
        "policy": exp.policy,
        "mode": exp.mode,
        "seed": exp.seed,
        **result.to_dict(),
        "dp_value": dp_value,
        "discrepancy_sigma": sigma,
        "config": exp.to_dict(),
    }
    _emit(_json(record), args.out or exp.output)
    return 0


def cmd_table1(args) -> int:
    rows = experiments.table1_rows()
    _emit(experiments.rows_to_csv(rows, "delta"), args.out)
    return 0


def cmd_table2(args) -> int:
    rows = experiments.table2_rows()
    _emit(experiments.rows_to_csv(rows, "u"), args.out)
    return 0


def cmd_curves(args) -> int:
    if args.x_max < 2:
        raise ConfigError("--x-max", "must be >= 2")
    if any(u < 1 for u in args.u) or args.c_idle <= 0:
        raise ConfigError("--u/--c-idle", "u must be >= 1 and c_idle positive")
    curves = experiments.idle_curves(args.u, args.c_idle, args.x_max)
    _emit(experiments.curves_to_csv(curves), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specsched",
        description="Opportunistic spectrum scheduling: exact solver and simulator.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log timings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON experiment config")
            p.add_argument("--mode", choices=[m.value for m in Mode])
            p.add_argument("--policy", choices=[k.value for k in PolicyKind])
            p.add_argument("--seed", type=int)
            p.add_argument("--trajectories", type=int)
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("solve", help="exact value of a policy")
    common(p)
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("simulate", help="Monte Carlo estimate of a policy")
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("table1", help="comparison table over fading memory delta")
    common(p, config=False)
    p.set_defaults(func=cmd_table1)
    p = sub.add_parser("table2", help="comparison table over occupancy exponent u")
    common(p, config=False)
    p.set_defaults(func=cmd_table2)
    p = sub.add_parser("curves", help="conditional idle probability curves")
    common(p, config=False)
    p.add_argument("--u", type=int, nargs="+", default=[1, 3, 5])
    p.add_argument("--c-idle", type=float, default=1.0)
    p.add_argument("--x-max", type=int, default=20)
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstanceTooLarge as exc:
        print(f"instance too large: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
