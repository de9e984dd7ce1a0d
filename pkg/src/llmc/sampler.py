"""Event-driven simulation of dX = phi(X) dt + dL.

The driver L is a finite-activity pure-jump process, so jump epochs are
simulated exactly (exponential waiting times at the total-mass rate, sizes
from the normalized measure); only the deterministic flow between jumps is
discretized, by positivity-preserving Euler steps no larger than dt_max.
Paths land exactly on jump and recording times.

Randomness comes from counter-based Philox streams: chain/path i draws from
``SeedSequence(seed, spawn_key=(i,))``, so concurrent runs are reproducible
and independent of thread count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernel
from .diagnostics import EmpiricalDistribution
from .measures import sample_jumps

__all__ = [
    "StiffnessError",
    "SimConfig",
    "Trajectory",
    "flow_step",
    "simulate_path",
    "simulate_paths",
    "sample_stationary",
    "write_trajectory_csv",
    "write_samples_csv",
]

_RECORD_MODES = ("full", "skeleton", "endpoint")


class StiffnessError(Exception):
    """Step bisection hit the depth limit; reports the offending state."""

    def __init__(self, x, phi, dt):
        super().__init__(
            f"flow step would not stabilize: x={x:g}, phi(x)={phi:g}, dt={dt:g} "
            f"after {kernel.MAX_BISECTION_DEPTH} bisections"
        )
        self.x = x
        self.phi = phi
        self.dt = dt


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``record`` selects what the trajectory stores: every Euler step
    ("full"), states at burn_in + k * skeleton_delta ("skeleton"), or only
    the final state ("endpoint").
    """

    x0: float
    t_end: float
    dt_max: float = 1e-3
    seed: int = 0
    record: str = "skeleton"
    burn_in: float = 50.0
    skeleton_delta: float = 1.0

    def __post_init__(self):
        if not self.x0 > 0:
            raise ValueError("x0 must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.dt_max <= self.skeleton_delta:
            raise ValueError("need 0 < dt_max <= skeleton_delta")
        if self.record not in _RECORD_MODES:
            raise ValueError(f"record must be one of {_RECORD_MODES}")
        if not 0 <= self.burn_in < self.t_end:
            raise ValueError("need 0 <= burn_in < t_end")


@dataclass(eq=False)
class Trajectory:
    """Recorded path: times/states per the record mode, plus every jump.

    ``flags`` marks post-jump rows in full mode.  Between jump markers the
    recorded states strictly decrease; at a marker the state increases by
    exactly the jump size.
    """

    times: np.ndarray
    states: np.ndarray
    flags: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray


def _rng_for(seed, stream=None):
    if stream is None:
        seq = np.random.SeedSequence(seed)
    else:
        seq = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(seq))


def _draw_jump_schedule(mu, rng, t_end):
    """All jump epochs in (0, t_end) and their sizes, stream-deterministic."""
    rate = mu.total
    waits = []
    elapsed = 0.0
    remaining = t_end
    while True:
        expect = rate * remaining
        batch = max(16, int(expect + 10.0 * math.sqrt(expect + 1.0)) + 1)
        w = rng.exponential(1.0 / rate, batch)
        waits.append(w)
        elapsed += float(np.sum(w))
        if elapsed >= t_end:
            break
        remaining = t_end - elapsed
    times = np.cumsum(np.concatenate(waits))
    times = times[times < t_end]
    sizes = sample_jumps(mu, rng, len(times))
    return times, sizes


def flow_step(field, x, dt):
    """One positivity-preserving Euler advance of the deterministic flow.

    The candidate x + phi(x) dt is accepted if it keeps more than half the
    state; otherwise the step is bisected, halves applied in sequence, until
    every sub-step changes the state by at most 50%.  The result is always
    in (0, x).
    """
    if not x > 0:
        raise ValueError("x must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    stack_dt = np.empty(kernel.MAX_BISECTION_DEPTH + 4)
    stack_depth = np.empty(kernel.MAX_BISECTION_DEPTH + 4, dtype=np.int64)
    out, err, bx, bphi, bdt = kernel.euler_step(
        float(x), float(dt), field.grid, field.coeffs, stack_dt, stack_depth
    )
    if err != kernel.OK:
        raise StiffnessError(bx, bphi, bdt)
    return float(out)


def _skeleton_times(cfg):
    n = int(math.floor((cfg.t_end - cfg.burn_in) / cfg.skeleton_delta + 1e-12))
    return cfg.burn_in + cfg.skeleton_delta * np.arange(1, n + 1)


def simulate_path(field, mu, cfg, *, rng=None):
    """Simulate one path of the jump-driven dynamics up to cfg.t_end.

    Deterministic given (seed, cfg, inputs): the jump schedule is drawn
    first, then the flow is integrated between events, landing exactly on
    jump and recording times.
    """
    if rng is None:
        rng = _rng_for(cfg.seed)
    jump_times, jump_sizes = _draw_jump_schedule(mu, rng, cfg.t_end)
    grid, coeffs = field.grid, field.coeffs

    if cfg.record == "full":
        edges = np.concatenate([[0.0], jump_times, [cfg.t_end]])
        capacity = 2 * int(np.sum(np.ceil(np.diff(edges) / cfg.dt_max))) + 4 * len(jump_times) + 64
        while True:
            times = np.empty(capacity)
            states = np.empty(capacity)
            flags = np.empty(capacity, dtype=np.int8)
            k, err, bx, bphi, bdt = kernel.run_path_full(
                cfg.x0, cfg.t_end, cfg.dt_max, jump_times, jump_sizes,
                times, states, flags, grid, coeffs,
            )
            if err == kernel.ERR_CAPACITY:
                capacity *= 2
                continue
            if err != kernel.OK:
                raise StiffnessError(bx, bphi, bdt)
            break
        return Trajectory(
            times=times[:k].copy(),
            states=states[:k].copy(),
            flags=flags[:k].copy(),
            jump_times=jump_times,
            jump_sizes=jump_sizes,
        )

    if cfg.record == "skeleton":
        record = _skeleton_times(cfg)
    else:
        record = np.array([], dtype=float)
    run = record if (len(record) and record[-1] == cfg.t_end) else np.append(record, cfg.t_end)
    out, err, bx, bphi, bdt = kernel.run_path_records(
        cfg.x0, cfg.dt_max, jump_times, jump_sizes, run, grid, coeffs
    )
    if err != kernel.OK:
        raise StiffnessError(bx, bphi, bdt)
    keep = len(record) if cfg.record == "skeleton" else len(run)
    states = out[:keep] if cfg.record == "skeleton" else out[-1:]
    times = record if cfg.record == "skeleton" else np.array([cfg.t_end])
    return Trajectory(
        times=times,
        states=states.copy(),
        flags=np.zeros(len(states), dtype=np.int8),
        jump_times=jump_times,
        jump_sizes=jump_sizes,
    )


def simulate_paths(field, mu, cfg, n_paths, *, threads=1):
    """Independent paths, one spawned stream each, merged by path index."""

    def one(i):
        return simulate_path(field, mu, cfg, rng=_rng_for(cfg.seed, stream=i))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(n_paths)))
    return [one(i) for i in range(n_paths)]


def sample_stationary(field, mu, cfg, n, *, n_chains=1, threads=1):
    """n states of the skeleton chain after burn-in, as draws from the target.

    The horizon is set to burn_in + n_i * skeleton_delta per chain; with
    several chains the n draws are split across independently seeded chains
    (spawn key = chain index) and concatenated in chain order, so the result
    does not depend on the number of threads.
    """
    if cfg.record != "skeleton":
        raise ValueError("sample_stationary requires record='skeleton'")
    if n < 1:
        raise ValueError("need n >= 1")
    n_chains = max(1, min(n_chains, n))
    counts = [n // n_chains + (1 if i < n % n_chains else 0) for i in range(n_chains)]

    def one(i):
        cfg_i = replace(
            cfg, t_end=cfg.burn_in + counts[i] * cfg.skeleton_delta, seed=cfg.seed
        )
        traj = simulate_path(field, mu, cfg_i, rng=_rng_for(cfg.seed, stream=i))
        return traj.states[: counts[i]]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(n_chains)))
    else:
        parts = [one(i) for i in range(n_chains)]
    return EmpiricalDistribution.from_samples(np.concatenate(parts))


def write_trajectory_csv(traj, path):
    """CSV export with columns time, state, jump_flag."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "state", "jump_flag"])
        for t, s, fl in zip(traj.times, traj.states, traj.flags):
            writer.writerow([repr(float(t)), repr(float(s)), int(fl)])


def write_samples_csv(samples, path):
    """One-column CSV of sample values (EmpiricalDistribution or array)."""
    values = samples.values if isinstance(samples, EmpiricalDistribution) else samples
    with open(path, "w", newline="") as fh:
        fh.write("sample\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")
