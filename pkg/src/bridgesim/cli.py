"""Command line front end: run scenarios, sweep parameter grids, print the
deposit table, and re-check invariants over a saved event log.

Exit status is 0 only when every invariant check passed.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

from .econ import format_deposit_table, reproduce_deposit_table
from .errors import InvalidScenario
from .harness import (Scenario, Strategy, check_invariants, parse_scenario,
                      run_scenario)

INT_GRID_KEYS = {
    "seed": "seed",
    "functionaries": "n_functionaries",
    "denomination": "denomination",
    "vmxos": "vmxo_count",
    "pegins": "n_pegins",
    "pegouts": "n_pegouts",
    "fee_rate": "fee_rate",
    "challenge_window": "challenge_window",
    "watch_threshold": "watch_threshold",
    "adversary": "adversary",
    "pegout_limit": "pegout_limit",
    "t_sep": "t_sep",
}


def _cmd_run(args: argparse.Namespace) -> int:
    text = Path(args.scenario).read_text()
    try:
        scenario = parse_scenario(text)
    except InvalidScenario as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario.seed = args.seed
    report = run_scenario(scenario)
    if args.log:
        Path(args.log).write_text("\n".join(report.log) + "\n")
    print(report.to_text())
    return 0 if report.all_passed else 1


def _parse_grid(text: str) -> list[Scenario]:
    axes: list[tuple[str, list]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, values = parts[0], parts[1:]
        if key in INT_GRID_KEYS:
            axes.append((INT_GRID_KEYS[key], [int(v) for v in values]))
        elif key == "strategy":
            axes.append(("strategy", [Strategy(v) for v in values]))
        else:
            raise InvalidScenario(f"grid line {lineno}: unknown key {key!r}")
    scenarios = []
    keys = [k for k, _ in axes]
    for combo in itertools.product(*(vals for _, vals in axes)):
        sc = Scenario(name="sweep")
        for k, v in zip(keys, combo):
            setattr(sc, k, v)
        if sc.strategy != Strategy.HONEST and sc.adversary is None:
            sc.adversary = sc.n_functionaries - 1
        sc.name = "sweep-" + "-".join(
            v.value if isinstance(v, Strategy) else str(v) for v in combo)
        scenarios.append(sc)
    return scenarios


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        scenarios = _parse_grid(Path(args.grid).read_text())
    except InvalidScenario as exc:
        print(f"invalid grid: {exc}", file=sys.stderr)
        return 2
    failures = 0
    for sc in scenarios:
        try:
            sc.validate()
        except InvalidScenario as exc:
            print(f"skip {sc.name}: {exc}")
            continue
        report = run_scenario(sc)
        status = "PASS" if report.all_passed else "FAIL"
        if not report.all_passed:
            failures += 1
        print(f"[{status}] {sc.name}")
    print(f"sweep: {len(scenarios)} scenarios, {failures} failures")
    return 0 if failures == 0 else 1


def _cmd_deposit_table(args: argparse.Namespace) -> int:
    rows = reproduce_deposit_table(args.fee_rates or None,
                                   args.functionaries or None)
    print(format_deposit_table(rows))
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    log = Path(args.log_file).read_text().splitlines()
    verdicts = check_invariants(log)
    for v in verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"[{status}] {v.name} {v.detail}".rstrip())
    return 0 if all(v.passed for v in verdicts) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgesim",
        description="Deterministic bridge-protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario's seed")
    p_run.add_argument("--log", default=None,
                       help="write the event log to this path")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a cartesian parameter grid")
    p_sweep.add_argument("--grid", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_dep = sub.add_parser("deposit-table",
                           help="print required deposits per functionary "
                                "count and fee rate")
    p_dep.add_argument("--fee-rates", type=int, nargs="+", default=None)
    p_dep.add_argument("--functionaries", type=int, nargs="+", default=None)
    p_dep.set_defaults(func=_cmd_deposit_table)

    p_check = sub.add_parser("check",
                             help="re-check invariants over a saved log")
    p_check.add_argument("log_file")
    p_check.set_defaults(func=_cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
