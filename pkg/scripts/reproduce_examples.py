#!/usr/bin/env python3
"""Run both built-in example configurations end to end.

Runs validate -> drift -> sample -> diagnose for the built-in double-well
and non-smooth configurations and prints each summary.  Outputs (samples,
histogram, drift table, diagnostics, summary) land under --out.

    python3 scripts/reproduce_figures.py --out results [--seed N]
"""

import argparse
import sys

from llmc.cli import cmd_reproduce


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    for example in ("double-well", "non-smooth"):
        print(f"=== {example} ===")
        code = cmd_reproduce(example, args.seed, f"{args.out}/{example}")
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
