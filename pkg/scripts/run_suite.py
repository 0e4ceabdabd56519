#!/usr/bin/env python3
"""Run the canned verification suite and write per-entry reports.

Usage: python scripts/run_suite.py [--seed N] [--out DIR] [--threads N]
"""

import argparse
import sys

from avibound.cli import run_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="reports")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()
    summary = run_suite(args.seed, args.out, threads=args.threads)
    for entry in summary["entries"]:
        print(f"{entry['name']:>20s}: {'pass' if entry['passed'] else 'FAIL'}")
    print(f"overall: {'pass' if summary['passed'] else 'FAIL'} (reports in {args.out}/)")
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
