"""Command-line entry point.

    lohesync run --config exp.yaml
    lohesync pair --config-a a.yaml --config-b b.yaml
    lohesync suite T5.1 [--kappa K] [--h H] [--seed S] [--steps N] [--json out.json]
    lohesync thresholds

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 suite failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import pair_run, run_experiment
from .suites import SUITE_IDS, SuiteOptions, run_theorem_suite
from .thresholds import find_beta0, find_beta1, lambda_of, m_of

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SUITE = 4


def _report_run(result, out) -> int:
    for kind, path in result.artifacts.items():
        print(f"wrote {kind}: {path}", file=out)
    if result.report is not None:
        state = "satisfied" if result.report.satisfied else "NOT satisfied"
        print(f"framework {result.report.theorem_id}: {state}", file=out)
    if result.status != 0:
        print(f"numerical failure at {result.error}", file=sys.stderr)
    return result.status


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    return _report_run(run_experiment(cfg), sys.stdout)


def cmd_pair(args) -> int:
    cfg_a = load_config(args.config_a)
    cfg_b = load_config(args.config_b)
    return _report_run(pair_run(cfg_a, cfg_b), sys.stdout)


def cmd_suite(args) -> int:
    opts = SuiteOptions(kappa=args.kappa, h=args.h, seed=args.seed, steps=args.steps)
    result = run_theorem_suite(args.suite_id, opts)
    for c in result.criteria:
        state = "SKIP" if c.passed is None else ("PASS" if c.passed else "FAIL")
        print(f"{state}  {result.suite_id}  {c.name}: {c.detail}")
    if result.framework is not None:
        for m in result.framework.margins:
            print(f"      hypothesis {m.condition}: actual {m.actual:.6g}, bound {m.required:.6g}, slack {m.slack:.3g}")
    print(f"suite {result.suite_id}: {result.status} ({result.elapsed_s:.2f} s)")
    payload = json.dumps(result.to_dict(), indent=1, sort_keys=True)
    if args.json:
        Path(args.json).write_text(payload + "\n", encoding="utf-8")
    for name in result.failed:
        print(f"failed criterion: {name}", file=sys.stderr)
    return result.exit_code


def cmd_thresholds(args) -> int:
    b0, b1 = find_beta0(), find_beta1()
    print(f"beta0 = {b0:.10f}  (root of Lambda)")
    print(f"beta1 = {b1:.10f}  (root of M)")
    print(f"{'beta':>8} {'Lambda':>14} {'M':>14}")
    for i in range(args.rows + 1):
        beta = b0 * i / args.rows
        print(f"{beta:8.5f} {lambda_of(beta):14.8f} {m_of(beta):14.8f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lohesync", description="Discrete Lohe aggregation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configured experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pair", help="run two trajectories in lockstep")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("suite", help="run a scripted theorem suite")
    p.add_argument("suite_id", choices=SUITE_IDS)
    p.add_argument("--kappa", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="step count (trial count for the lemma suite)")
    p.add_argument("--json", help="write the machine-readable summary here")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("thresholds", help="print beta0, beta1 and a Lambda/M table")
    p.add_argument("--rows", type=int, default=10)
    p.set_defaults(func=cmd_thresholds)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
