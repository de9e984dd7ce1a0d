#!/usr/bin/env python3
"""Simulate one full-resolution path for a config and export it as CSV.

The output has columns time, state, jump_flag; jump_flag marks post-jump
rows.  Useful for plotting sample paths.

    python3 scripts/export_trajectory.py --config cfg.ini --t-end 50 \\
        --out trajectory.csv
"""

import argparse
import sys
from dataclasses import replace

from llmc.config import parse_config
from llmc.drift import build_drift_table
from llmc.sampler import simulate_path, write_trajectory_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--t-end", type=float, default=50.0)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="trajectory.csv")
    args = parser.parse_args()

    cfg = parse_config(args.config, seed_override=args.seed)
    field = build_drift_table(cfg.target, cfg.measure, cfg.drift_points)
    sim = replace(cfg.sim, record="full", t_end=args.t_end, burn_in=0.0)
    traj = simulate_path(field, cfg.measure, sim)
    write_trajectory_csv(traj, args.out)
    print(f"{len(traj.times)} rows, {len(traj.jump_times)} jumps -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
