#!/usr/bin/env python3
"""Run the full 12-experiment matrix and print the combined CSV report.

Same work as `covlab suite --all`, kept as a plain script so the matrix
can be driven from a queue or cron without the console entry point.
Exit status 0 means every gated row in every report passed.
"""

import argparse
import sys

from covlab.cli import _combined_csv
from covlab.harness import run_suite

LEDGERS = {"resolved": "resolved", "paper": "paper-printed"}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument(
        "--ledger",
        choices=tuple(LEDGERS),
        default="resolved",
        help="'paper' runs with the printed signs as a negative control",
    )
    ap.add_argument("--out", default=None, help="also write the CSV to this path")
    args = ap.parse_args(argv)

    reports = run_suite(seed=args.seed, sign_ledger=LEDGERS[args.ledger])
    text = _combined_csv(reports)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)

    failed = [f"{r.config.theory}/{r.config.experiment}" for r in reports if not r.all_pass]
    if failed:
        print("FAILED: " + ", ".join(failed), file=sys.stderr)
        return 1
    print(f"all {len(reports)} experiments passed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
