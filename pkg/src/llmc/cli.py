"""Command-line entry point.

    llmc validate  --config cfg.ini
    llmc drift     --config cfg.ini [--out DIR]
    llmc sample    --config cfg.ini [--seed N] [--out DIR]
    llmc diagnose  --config cfg.ini --samples samples.csv [--out DIR]
    llmc reproduce double-well|non-smooth [--seed N] [--out DIR]

Exit codes: 0 success, 1 validation failure, 2 config/parse error,
3 numerical failure.  The default output directory is $LLMC_OUT_DIR.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import BUILTIN_EXAMPLES, ConfigError, builtin_config, parse_config
from .diagnostics import (
    histogram_modes,
    EmpiricalDistribution,
    default_bumps,
    histogram_tv,
    invariance_residual,
    ks_distance,
    target_cdf,
    target_quantile,
    truncation_report,
)
from .drift import (
    DegenerateDensityError,
    DriftConsistencyError,
    DriftOverflowError,
    build_drift_table,
    write_drift_csv,
)
from .measures import (
    Finding,
    InvalidMeasureError,
    MalformedDensityError,
    ValidationReport,
    validate_b1,
    validate_b2,
)
from .quadrature import QuadratureError
from .sampler import StiffnessError, sample_stationary, write_samples_csv

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _validate_c1(measure):
    """Support bounded inside (1/n, n) for some n: uniqueness route one."""
    locs = [loc for loc, _ in measure.atoms]
    lo = min(locs) if locs else None
    hi = max(locs) if locs else None
    if measure.density is not None:
        if measure.density.upper == float("inf"):
            return Finding(
                "c1-bounded-support",
                "WARN",
                "jump density has unbounded support; uniqueness relies on (c2)",
            )
        cells, cum, _ = measure._cells
        nonzero = np.nonzero(np.diff(cum) > 0)[0]
        lo_d = cells[nonzero[0]] if len(nonzero) else 0.0
        lo = lo_d if lo is None else min(lo, lo_d)
        hi = measure._upper_eff if hi is None else max(hi, measure._upper_eff)
    if lo is None or lo <= 0.0:
        return Finding(
            "c1-bounded-support",
            "WARN",
            "jump support reaches 0; uniqueness relies on (c2)",
        )
    n = max(int(math.ceil(hi)) + 1, int(math.ceil(1.0 / lo)) + 1)
    return Finding(
        "c1-bounded-support", "PASS", f"jump support inside (1/{n}, {n})"
    )


def _validate_c2(target):
    if target.breakpoints:
        return Finding(
            "c2-piecewise-lipschitz",
            "PASS",
            f"breakpoints declared at {list(target.breakpoints)}; density assumed "
            "Lipschitz between them",
        )
    return Finding(
        "c2-piecewise-lipschitz", "PASS", "no breakpoints declared; density assumed Lipschitz"
    )


def _run_validators(cfg):
    try:
        rep_b1 = validate_b1(cfg.target)
    except MalformedDensityError as exc:
        rep_b1 = ValidationReport(
            (Finding("b1-evaluation", "FAIL", f"malformed density: {exc}"),)
        )
    rep_b2 = validate_b2(cfg.measure)
    extra = ValidationReport((_validate_c1(cfg.measure), _validate_c2(cfg.target)))
    return rep_b1, rep_b2, extra


def cmd_validate(cfg):
    rep_b1, rep_b2, extra = _run_validators(cfg)
    for rep in (rep_b1, rep_b2, extra):
        print(rep.summary())
    ok = rep_b1.ok and rep_b2.ok
    print(f"overall: {'PASS/WARN' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VALIDATION


def _require_valid(cfg):
    rep_b1, rep_b2, _ = _run_validators(cfg)
    if not (rep_b1.ok and rep_b2.ok):
        print(rep_b1.summary())
        print(rep_b2.summary())
        print("validation failed; not running", file=sys.stderr)
        return False
    return True


def _ensure_out(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def cmd_drift(cfg):
    if not _require_valid(cfg):
        return EXIT_VALIDATION
    out = _ensure_out(cfg)
    field = build_drift_table(cfg.target, cfg.measure, cfg.drift_points)
    path = os.path.join(out, "drift.csv")
    write_drift_csv(field, path)
    qs = [target_quantile(cfg.target, q) for q in (0.1, 0.3, 0.5, 0.7, 0.9)]
    print(f"drift table: {len(field.grid)} points -> {path}")
    print(f"phi range: [{field.values.min():.6g}, {field.values.max():.6g}]")
    for q, x in zip((0.1, 0.3, 0.5, 0.7, 0.9), qs):
        print(f"phi at {int(q * 100)}% quantile (x={x:.4g}): {field(float(x)):.6g}")
    return EXIT_OK


def _histogram_rows(values, cfg):
    lo = 0.0
    hi = max(cfg.target.domain_cutoff, float(values[-1]))
    edges = np.linspace(lo, hi, cfg.bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    width = edges[1] - edges[0]
    dens = counts / (len(values) * width)
    return edges, dens


def _diagnostics_payload(cfg, emp):
    ks = ks_distance(emp, cfg.target)
    tv = histogram_tv(emp, cfg.target, cfg.bins)
    residuals = []
    for bump in default_bumps(cfg.target):
        residuals.append(
            {
                "center": bump.center,
                "radius": bump.radius,
                "value": invariance_residual(cfg.target, cfg.measure, bump),
            }
        )
    rows = []
    levels = [n for n in cfg.truncation_levels if n > 1]
    grid = np.linspace(
        cfg.target.domain_cutoff / 128.0, cfg.target.domain_cutoff, 64
    )
    try:
        report = truncation_report(cfg.target, cfg.measure, levels, grid)
        rows = [
            {"n": r.n, "sup_err": r.sup_err, "tail_mass": r.tail_mass}
            for r in report.rows
        ]
    except InvalidMeasureError:
        rows = []
    return {"ks": ks, "tv": tv, "residuals": residuals, "truncation": rows}


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def cmd_sample(cfg):
    if not _require_valid(cfg):
        return EXIT_VALIDATION
    out = _ensure_out(cfg)
    field = build_drift_table(cfg.target, cfg.measure, cfg.drift_points)
    sim = cfg.sim
    if sim.record != "skeleton":
        from dataclasses import replace

        sim = replace(sim, record="skeleton")
    emp = sample_stationary(
        field, cfg.measure, sim, cfg.n_samples, n_chains=cfg.n_chains, threads=cfg.threads
    )
    if "csv" in cfg.formats:
        write_samples_csv(emp, os.path.join(out, "samples.csv"))
        edges, dens = _histogram_rows(emp.values, cfg)
        with open(os.path.join(out, "histogram.csv"), "w", newline="") as fh:
            fh.write("bin_left,bin_right,density\n")
            for i in range(len(dens)):
                fh.write(f"{edges[i]!r},{edges[i + 1]!r},{dens[i]!r}\n")
    payload = _diagnostics_payload(cfg, emp)
    if "json" in cfg.formats:
        _write_json(payload, os.path.join(out, "diagnostics.json"))
    cfg.run_record(os.path.join(out, "run_record.ini"))
    print(f"{emp.n} samples -> {out}")
    print(f"ks={payload['ks']:.5f} tv={payload['tv']:.5f}")
    return EXIT_OK


def cmd_diagnose(cfg, samples_path):
    if not _require_valid(cfg):
        return EXIT_VALIDATION
    out = _ensure_out(cfg)
    try:
        values = []
        with open(samples_path) as fh:
            header = fh.readline()
            if header.strip() and header.strip() != "sample":
                values.append(float(header))
            for line in fh:
                if line.strip():
                    values.append(float(line))
        emp = EmpiricalDistribution.from_samples(np.asarray(values))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"samples file {samples_path}: {exc}") from exc
    payload = _diagnostics_payload(cfg, emp)
    _write_json(payload, os.path.join(out, "diagnostics.json"))
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_reproduce(example_id, seed_override, out_override):
    text = builtin_config(example_id)
    out_dir = out_override or os.path.join(
        os.environ.get("LLMC_OUT_DIR", "llmc-out"), example_id
    )
    cfg = parse_config(text, seed_override=seed_override, out_override=out_dir)
    code = cmd_validate(cfg)
    if code != EXIT_OK:
        return code
    code = cmd_drift(cfg)
    if code != EXIT_OK:
        return code
    code = cmd_sample(cfg)
    if code != EXIT_OK:
        return code

    with open(os.path.join(cfg.out_dir, "samples.csv")) as fh:
        fh.readline()
        values = np.array([float(line) for line in fh if line.strip()])
    values.sort()
    summary = {"example": example_id, "n": int(len(values))}
    emp = EmpiricalDistribution(values)
    summary["ks"] = ks_distance(emp, cfg.target)
    if example_id == "double-well":
        summary["mode_left"], summary["mode_right"] = histogram_modes(values, split=5.0)
        summary["expected_modes"] = [1.41, 8.61]
    else:
        mass = float(np.mean((values > 2.0) & (values < 4.0)))
        summary["mass_2_4"] = mass
        summary["expected_mass_2_4"] = target_cdf(cfg.target, 4.0) - target_cdf(
            cfg.target, 2.0
        )
    _write_json(summary, os.path.join(cfg.out_dir, "summary.json"))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="llmc",
        description="Sample from a density on (0, inf) by simulating "
        "jump-driven Langevin dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "drift", "sample", "diagnose"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--seed", type=int, default=None, help="override [sim] seed")
        p.add_argument("--out", default=None, help="override output directory")
        if name == "diagnose":
            p.add_argument("--samples", required=True, help="one-column samples CSV")
    p = sub.add_parser("reproduce")
    p.add_argument("example", choices=BUILTIN_EXAMPLES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config/parse code
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.example, args.seed, args.out)
        cfg = parse_config(args.config, seed_override=args.seed, out_override=args.out)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "drift":
            return cmd_drift(cfg)
        if args.command == "sample":
            return cmd_sample(cfg)
        return cmd_diagnose(cfg, args.samples)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        QuadratureError,
        StiffnessError,
        DegenerateDensityError,
        DriftOverflowError,
        DriftConsistencyError,
        InvalidMeasureError,
        MalformedDensityError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
