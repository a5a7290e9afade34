"""Command-line entry point for the experiment harness.

Subcommands: identities | converge | conserve | noise | solve. Each reads a
flat key = value config (all keys optional), writes a CSV report, and exits
0 exactly when every configured tolerance passed.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ExperimentConfig,
    run_identity_suite,
    run_convergence_study,
    run_conservation_study,
    run_noise_study,
    run_solve,
)

RUNNERS = {
    "identities": run_identity_suite,
    "converge": run_convergence_study,
    "conserve": run_conservation_study,
    "noise": run_noise_study,
    "solve": run_solve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roughkdv",
        description="identity, convergence, conservation and noise studies "
                    "for the spectral rough-path KdV toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, help=f"run the {name} study")
        sp.add_argument("--config", default=None, help="flat key = value config file")
        sp.add_argument("--out", default=None, help="CSV report path (overrides config)")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--threads", type=int, default=None, help="worker threads override")
        if name == "solve":
            sp.add_argument("--trajectory", default=None, help="trajectory CSV path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.out is not None:
        cfg.out = args.out

    if args.command == "solve":
        report = run_solve(cfg, trajectory_out=args.trajectory)
    else:
        report = RUNNERS[args.command](cfg)

    report.write_csv(cfg.out)
    fails = [r for r in report.rows if not r["passed"]]
    print(f"{args.command}: {len(report.rows)} rows -> {cfg.out}"
          f" ({'all passed' if not fails else f'{len(fails)} FAILED'})")
    for row in fails:
        print(f"  FAIL {row['item']}: value={row['value']} target={row['target']}")
    return 0 if not fails else 1


if __name__ == "__main__":
    sys.exit(main())
