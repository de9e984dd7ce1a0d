"""Run configuration: plain INI files.

Sections and keys (all expressions use the variable ``x``):

[target]
  density      required; expression for the unnormalized target (DSL)
  breakpoints  optional comma list; merged with indicator endpoints
  cutoff       optional quadrature truncation point
  tail_rate    optional exponential tail-rate hint

[jump_measure]
  atoms         optional comma list of location:mass pairs, e.g. "4:1, 8:2"
  density       optional expression for the jump density
  density_upper optional finite support bound of the jump density

[sim]
  x0, t_end, dt_max, seed, record, burn_in, skeleton_delta   (SimConfig)
  n_samples, n_chains, threads                               (sampling run)

[drift]
  n_points     drift table size (default 512)

[diagnostics]
  bins               histogram bin count (default 100)
  truncation_levels  comma list of truncation levels (default 2,4,8,16)

[output]
  dir      output directory (default $LLMC_OUT_DIR or ./llmc-out)
  formats  comma list out of csv,json (default both)
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from . import expr
from .measures import DensityPart, LevyMeasure, TargetDensity
from .sampler import SimConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "builtin_config", "BUILTIN_EXAMPLES"]


class ConfigError(Exception):
    """Unusable configuration; message names the section/key."""


@dataclass(eq=False)
class RunConfig:
    target: TargetDensity
    measure: LevyMeasure
    sim: SimConfig
    n_samples: int
    n_chains: int
    threads: int
    drift_points: int
    bins: int
    truncation_levels: tuple
    out_dir: str
    formats: tuple
    raw: configparser.ConfigParser

    def run_record(self, out_path):
        """Write the resolved configuration; re-running it reproduces the
        same outputs byte for byte."""
        rec = configparser.ConfigParser()
        rec.read_dict({s: dict(self.raw.items(s)) for s in self.raw.sections()})
        if not rec.has_section("sim"):
            rec.add_section("sim")
        rec.set("sim", "seed", str(self.sim.seed))
        if not rec.has_section("output"):
            rec.add_section("output")
        rec.set("output", "dir", self.out_dir)
        with open(out_path, "w") as fh:
            rec.write(fh)


def _get(cp, section, key, default=None):
    if cp.has_option(section, key):
        return cp.get(section, key)
    return default


def _get_float(cp, section, key, default=None):
    raw = _get(cp, section, key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def _get_int(cp, section, key, default=None):
    raw = _get(cp, section, key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from None


def _parse_expression(source, where):
    try:
        return expr.parse(source)
    except expr.ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_atoms(raw):
    atoms = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            loc_s, mass_s = item.split(":")
            atoms.append((float(loc_s), float(mass_s)))
        except ValueError:
            raise ConfigError(
                f"[jump_measure] atoms: expected location:mass, got {item!r}"
            ) from None
    return tuple(atoms)


def _build_target(cp):
    source = _get(cp, "target", "density")
    if source is None:
        raise ConfigError("[target] density is required")
    ast = _parse_expression(source, "[target] density")
    bps = set(expr.breakpoints_of(ast))
    raw_bps = _get(cp, "target", "breakpoints")
    if raw_bps:
        try:
            bps.update(float(b) for b in raw_bps.split(",") if b.strip())
        except ValueError:
            raise ConfigError(f"[target] breakpoints: not numbers: {raw_bps!r}") from None
    return TargetDensity(
        evaluate=expr.as_function(ast),
        breakpoints=tuple(sorted(b for b in bps if b > 0)),
        tail_rate_hint=_get_float(cp, "target", "tail_rate"),
        domain_cutoff=_get_float(cp, "target", "cutoff"),
    )


def _build_measure(cp):
    atoms = ()
    raw_atoms = _get(cp, "jump_measure", "atoms")
    if raw_atoms:
        atoms = _parse_atoms(raw_atoms)
    density = None
    source = _get(cp, "jump_measure", "density")
    if source:
        ast = _parse_expression(source, "[jump_measure] density")
        upper = _get_float(cp, "jump_measure", "density_upper", float("inf"))
        density = DensityPart(
            pdf=expr.as_function(ast),
            upper=upper,
            breakpoints=tuple(b for b in expr.breakpoints_of(ast) if b > 0),
        )
    if not atoms and density is None:
        raise ConfigError("[jump_measure] needs atoms and/or density")
    return LevyMeasure(atoms=atoms, density=density)


def parse_config(source, *, seed_override=None, out_override=None):
    """Parse a configuration (file path or config text) into a RunConfig."""
    cp = configparser.ConfigParser()
    try:
        if "\n" in source or "=" in source:
            cp.read_string(source)
        elif os.path.exists(source):
            cp.read(source)
        else:
            raise ConfigError(f"config file not found: {source}")
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    target = _build_target(cp)
    measure = _build_measure(cp)

    seed = _get_int(cp, "sim", "seed", 0) if seed_override is None else int(seed_override)
    try:
        sim = SimConfig(
            x0=_get_float(cp, "sim", "x0", 1.0),
            t_end=_get_float(cp, "sim", "t_end", 51.0),
            dt_max=_get_float(cp, "sim", "dt_max", 1e-3),
            seed=seed,
            record=_get(cp, "sim", "record", "skeleton"),
            burn_in=_get_float(cp, "sim", "burn_in", 50.0),
            skeleton_delta=_get_float(cp, "sim", "skeleton_delta", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[sim]: {exc}") from exc

    n_samples = _get_int(cp, "sim", "n_samples", 50000)
    if n_samples < 1:
        raise ConfigError(f"[sim] n_samples must be positive, got {n_samples}")
    n_chains = _get_int(cp, "sim", "n_chains", 1)
    threads = _get_int(cp, "sim", "threads", 1)
    if n_chains < 1 or threads < 1:
        raise ConfigError("[sim] n_chains and threads must be positive")

    drift_points = _get_int(cp, "drift", "n_points", 512)
    bins = _get_int(cp, "diagnostics", "bins", 100)
    if bins < 2:
        raise ConfigError(f"[diagnostics] bins must be at least 2, got {bins}")
    raw_levels = _get(cp, "diagnostics", "truncation_levels", "2,4,8,16")
    try:
        levels = tuple(int(v) for v in raw_levels.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"[diagnostics] truncation_levels: {raw_levels!r}") from None

    out_dir = out_override or _get(cp, "output", "dir") or os.environ.get("LLMC_OUT_DIR", "llmc-out")
    raw_formats = _get(cp, "output", "formats", "csv,json")
    formats = tuple(f.strip() for f in raw_formats.split(",") if f.strip())
    unknown = set(formats) - {"csv", "json"}
    if unknown:
        raise ConfigError(f"[output] formats: unknown {sorted(unknown)}")

    return RunConfig(
        target=target,
        measure=measure,
        sim=sim,
        n_samples=n_samples,
        n_chains=n_chains,
        threads=threads,
        drift_points=drift_points,
        bins=bins,
        truncation_levels=levels,
        out_dir=out_dir,
        formats=formats,
        raw=cp,
    )


# Built-in example configurations.  The double-well exponent carries a
# negative leading sign: with a positive sign the density grows like
# exp(x^4/10) and is not integrable, while the negative sign gives the
# intended bimodal target (modes near 1.41 and 8.61, height ratio 0.84).
# An additive constant in the exponent would only rescale the density and is
# dropped.  The non-integrable sign variant stays available as
# "double-well-raw-sign" and fails validation.
BUILTIN_EXAMPLES = ("double-well", "non-smooth", "double-well-raw-sign")

_DOUBLE_WELL = """\
[target]
density = exp(-0.1*x*(x-4)*(x-6.02)*(x-10))

[jump_measure]
atoms = 4:1, 8:2
density = exp(-x)

[sim]
x0 = 1.0
dt_max = 1e-3
burn_in = 50
skeleton_delta = 1
n_samples = 50000
seed = 20260810
"""

_DOUBLE_WELL_RAW = """\
[target]
density = exp(0.1*x*(x-4)*(x-6.02)*(x-10) + 0.5)
cutoff = 12

[jump_measure]
atoms = 4:1, 8:2
density = exp(-x)

[sim]
x0 = 1.0
dt_max = 1e-3
burn_in = 50
skeleton_delta = 1
n_samples = 50000
seed = 20260810
"""

_NON_SMOOTH = """\
[target]
density = exp(-0.5*x) + indicator(2,4)

[jump_measure]
atoms = 1:1
density = x^2*exp(-0.5*x)

[sim]
x0 = 1.0
dt_max = 1e-3
burn_in = 50
skeleton_delta = 1
n_samples = 50000
seed = 20260810
"""


def builtin_config(example_id):
    """Configuration text for a built-in example."""
    table = {
        "double-well": _DOUBLE_WELL,
        "non-smooth": _NON_SMOOTH,
        "double-well-raw-sign": _DOUBLE_WELL_RAW,
    }
    if example_id not in table:
        raise ConfigError(
            f"unknown example {example_id!r}; choose from {', '.join(BUILTIN_EXAMPLES)}"
        )
    return table[example_id]
