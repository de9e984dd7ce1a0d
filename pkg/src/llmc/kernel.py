"""Jitted inner loop of the event-driven simulator.

Between jumps the state follows dx/dt = phi(x) with phi < 0; the kernel
advances it by plain Euler steps and lands exactly on jump and recording
times.  Step sizes are bounded above by dt_max and additionally shrunk where
phi varies fast: each step may change log|phi| by at most LOG_STEP_CAP
(first-order Euler badly underestimates the time spent in sharp drift
minima otherwise, which starves exactly the high-density regions).  A step
whose candidate would cut the state by more than half is recursively
bisected, so the state stays in (0, x).

phi comes from the tabulated drift field: cubic Hermite pieces of
log(-phi) inside the grid, the last value held constant above it, and a
linear pull toward zero below the lowest grid point.

All functions are deterministic and allocation-free inside the hot loop, so
identical inputs give bit-identical paths regardless of threading.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MAX_BISECTION_DEPTH = 60
LOG_STEP_CAP = 0.05  # max |d log|phi|| per Euler step

# error codes
OK = 0
ERR_STIFF = 1
ERR_CAPACITY = 2


@njit(cache=True, nogil=True)
def phi_eval(grid, coeffs, x):
    # coeffs are cubic Hermite pieces of log(-phi); see DriftField
    n = grid.shape[0]
    if x < grid[0]:
        return -np.exp(coeffs[3, 0]) * (x / grid[0])
    if x >= grid[n - 1]:
        t = grid[n - 1] - grid[n - 2]
        k = n - 2
        return -np.exp(((coeffs[0, k] * t + coeffs[1, k]) * t + coeffs[2, k]) * t + coeffs[3, k])
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x < grid[mid]:
            hi = mid
        else:
            lo = mid
    t = x - grid[lo]
    return -np.exp(((coeffs[0, lo] * t + coeffs[1, lo]) * t + coeffs[2, lo]) * t + coeffs[3, lo])


@njit(cache=True, nogil=True)
def phi_and_sharpness(grid, coeffs, x):
    """(phi(x), |d/dx log|phi||) for the step-size controller."""
    n = grid.shape[0]
    if x < grid[0]:
        phi = -np.exp(coeffs[3, 0]) * (x / grid[0])
        return phi, 1.0 / x if x > 0.0 else 0.0
    if x >= grid[n - 1]:
        t = grid[n - 1] - grid[n - 2]
        k = n - 2
        g = ((coeffs[0, k] * t + coeffs[1, k]) * t + coeffs[2, k]) * t + coeffs[3, k]
        return -np.exp(g), 0.0
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x < grid[mid]:
            hi = mid
        else:
            lo = mid
    t = x - grid[lo]
    g = ((coeffs[0, lo] * t + coeffs[1, lo]) * t + coeffs[2, lo]) * t + coeffs[3, lo]
    dg = (3.0 * coeffs[0, lo] * t + 2.0 * coeffs[1, lo]) * t + coeffs[2, lo]
    return -np.exp(g), abs(dg)


@njit(cache=True, nogil=True)
def euler_step(x, dt, grid, coeffs, stack_dt, stack_depth):
    """One positivity-preserving Euler advance over time dt.

    Returns (x_new, err, bad_x, bad_phi, bad_dt); err != OK means the
    bisection depth limit was hit (stiffness).
    """
    phi = phi_eval(grid, coeffs, x)
    cand = x + phi * dt
    if cand > 0.5 * x:
        return cand, OK, 0.0, 0.0, 0.0
    top = 0
    stack_dt[top] = dt
    stack_depth[top] = 0
    top = 1
    while top > 0:
        top -= 1
        h = stack_dt[top]
        d = stack_depth[top]
        phi = phi_eval(grid, coeffs, x)
        cand = x + phi * h
        if cand > 0.5 * x:
            x = cand
        else:
            if d >= MAX_BISECTION_DEPTH:
                return x, ERR_STIFF, x, phi, h
            stack_dt[top] = 0.5 * h
            stack_depth[top] = d + 1
            stack_dt[top + 1] = 0.5 * h
            stack_depth[top + 1] = d + 1
            top += 2
    return x, OK, 0.0, 0.0, 0.0


@njit(cache=True, nogil=True)
def _controlled_dt(x, dt_max, t_left, grid, coeffs):
    # Both caps guarantee geometric progress in x (0.05/|dlog phi| resp.
    # 0.1 x per step), so no lower bound on h is needed for termination
    # even when h drops below the rounding granularity of t_left.
    h = dt_max if dt_max < t_left else t_left
    phi, sharp = phi_and_sharpness(grid, coeffs, x)
    speed = -phi * sharp
    if speed > 0.0:
        h_acc = LOG_STEP_CAP / speed
        if h_acc < h:
            h = h_acc
    # relative-state cap: resolves pull-backs through regions where the
    # tabulated phi is flat (constant extension above the grid) and the
    # log-slope signal vanishes
    if phi < 0.0:
        h_x = 0.1 * x / -phi
        if h_x < h:
            h = h_x
    return h


@njit(cache=True, nogil=True)
def flow(x, duration, dt_max, grid, coeffs, stack_dt, stack_depth):
    """Advance over ``duration`` with adaptive Euler steps of size <= dt_max."""
    t_left = duration
    while t_left > 0.0:
        h = _controlled_dt(x, dt_max, t_left, grid, coeffs)
        x, err, bx, bphi, bdt = euler_step(x, h, grid, coeffs, stack_dt, stack_depth)
        if err != OK:
            return x, err, bx, bphi, bdt
        # the final step has h == t_left exactly, so this reaches 0.0
        t_left -= h
    return x, OK, 0.0, 0.0, 0.0


@njit(cache=True, nogil=True)
def run_path_records(x0, dt_max, jump_times, jump_sizes, record_times, grid, coeffs):
    """Skeleton/endpoint driver: states at ``record_times`` only.

    Jumps and record times must each be ascending; a jump at exactly a
    record time is applied first (the recorded path is right-continuous).
    """
    out = np.empty(record_times.shape[0])
    stack_dt = np.empty(MAX_BISECTION_DEPTH + 4)
    stack_depth = np.empty(MAX_BISECTION_DEPTH + 4, dtype=np.int64)
    x = x0
    t = 0.0
    i_j = 0
    i_r = 0
    nj = jump_times.shape[0]
    nr = record_times.shape[0]
    while i_j < nj or i_r < nr:
        if i_j < nj and (i_r >= nr or jump_times[i_j] <= record_times[i_r]):
            t_ev = jump_times[i_j]
            is_jump = True
        else:
            t_ev = record_times[i_r]
            is_jump = False
        x, err, bx, bphi, bdt = flow(x, t_ev - t, dt_max, grid, coeffs, stack_dt, stack_depth)
        if err != OK:
            return out, err, bx, bphi, bdt
        t = t_ev
        if is_jump:
            x = x + jump_sizes[i_j]
            i_j += 1
        else:
            out[i_r] = x
            i_r += 1
    return out, OK, 0.0, 0.0, 0.0


@njit(cache=True, nogil=True)
def run_path_full(x0, t_end, dt_max, jump_times, jump_sizes, times, states, flags, grid, coeffs):
    """Full-resolution driver: every Euler step endpoint plus pre/post jump
    states.  Returns the number of rows written; ERR_CAPACITY asks the
    caller to retry with larger buffers."""
    stack_dt = np.empty(MAX_BISECTION_DEPTH + 4)
    stack_depth = np.empty(MAX_BISECTION_DEPTH + 4, dtype=np.int64)
    cap = times.shape[0]
    x = x0
    t = 0.0
    k = 0
    times[k] = 0.0
    states[k] = x
    flags[k] = 0
    k += 1
    nj = jump_times.shape[0]
    for i_j in range(nj + 1):
        t_ev = jump_times[i_j] if i_j < nj else t_end
        t_left = t_ev - t
        while t_left > 0.0:
            h = _controlled_dt(x, dt_max, t_left, grid, coeffs)
            x, err, bx, bphi, bdt = euler_step(x, h, grid, coeffs, stack_dt, stack_depth)
            if err != OK:
                return k, err, bx, bphi, bdt
            t_left -= h
            if k >= cap:
                return k, ERR_CAPACITY, 0.0, 0.0, 0.0
            times[k] = t_ev - t_left
            states[k] = x
            flags[k] = 0
            k += 1
        t = t_ev
        if i_j < nj:
            x = x + jump_sizes[i_j]
            if k >= cap:
                return k, ERR_CAPACITY, 0.0, 0.0, 0.0
            times[k] = t
            states[k] = x
            flags[k] = 1
            k += 1
    return k, OK, 0.0, 0.0, 0.0
