"""Agreement between sampler output and the target, and numerical checks of
the invariance theory.

The headline check is :func:`invariance_residual`: for the generator

    A f(x) = phi(x) f'(x) + int (f(x+z) - f(x)) mu(dz)

the target is infinitesimally invariant iff int A f dpi = 0 for all smooth
compactly supported f.  With phi computed from the tail-convolution formula
the residual must vanish up to quadrature error for every test function; a
deliberately rescaled drift must not.  Smooth compactly supported bumps
stand in for the full test-function space.

Empirical-versus-target agreement is quantified by the Kolmogorov-Smirnov
distance of the ECDF to the target CDF and by a binned total-variation
proxy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .drift import drift_cp, tail_convolution, truncate_measure
from .quadrature import fixed_panel_integrate, integrate

__all__ = [
    "EmpiricalDistribution",
    "BumpFunction",
    "target_cdf",
    "target_cdf_many",
    "target_quantile",
    "ks_distance",
    "histogram_tv",
    "generator_apply",
    "invariance_residual",
    "lag_autocorrelation",
    "histogram_modes",
    "default_bumps",
    "TruncationRow",
    "TruncationReport",
    "truncation_report",
]


@dataclass(eq=False)
class EmpiricalDistribution:
    """Sorted positive sample values with ECDF access."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) == 0:
            raise ValueError("need a non-empty 1-d sample array")
        if np.any(np.diff(self.values) < 0):
            raise ValueError("values must be sorted ascending")
        if self.values[0] <= 0:
            raise ValueError("samples must be strictly positive")

    @classmethod
    def from_samples(cls, samples):
        return cls(np.sort(np.asarray(samples, dtype=float)))

    @property
    def n(self):
        return len(self.values)

    def ecdf(self, x):
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n


@dataclass(eq=False)
class BumpFunction:
    """Smooth bump supported on (center - radius, center + radius):
    f(x) = exp(-1 / (1 - u^2)) with u = (x - center) / radius."""

    center: float
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and self.center - self.radius > 0):
            raise ValueError("need radius > 0 and center - radius > 0")

    @property
    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def _u(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.radius

    def __call__(self, x):
        u = self._u(x)
        inside = np.abs(u) < 1.0
        out = np.zeros(u.shape)
        w = 1.0 - u[inside] ** 2
        out[inside] = np.exp(-1.0 / w)
        return out if out.shape else float(out)

    def derivative(self, x):
        u = self._u(x)
        inside = np.abs(u) < 1.0
        out = np.zeros(u.shape)
        ui = u[inside]
        w = 1.0 - ui**2
        out[inside] = np.exp(-1.0 / w) * (-2.0 * ui / w**2) / self.radius
        return out if out.shape else float(out)


# --- target CDF ------------------------------------------------------------


def target_cdf_many(pi, xs):
    """Target CDF at many points: one cumulative breakpoint-aware sweep."""
    xs = np.asarray(xs, dtype=float)
    cutoff = pi.domain_cutoff
    pts = np.clip(xs, 0.0, cutoff)
    knots = np.unique(np.concatenate([[0.0, cutoff], np.asarray(pi.breakpoints), pts]))
    nodes15, weights15 = np.polynomial.legendre.leggauss(15)
    lo = knots[:-1]
    hi = knots[1:]
    half = 0.5 * (hi - lo)
    centers = 0.5 * (hi + lo)
    eval_pts = centers[:, None] + half[:, None] * nodes15[None, :]
    vals = np.asarray(pi.evaluate(eval_pts.ravel()), dtype=float).reshape(eval_pts.shape)
    seg = half * (vals @ weights15)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = pi.mass
    idx = np.searchsorted(knots, pts)
    return np.clip(cum[idx] / total, 0.0, 1.0)


def target_cdf(pi, x):
    """F(x) = int_0^x pi / int_0^cutoff pi, breakpoint-aware."""
    x = float(x)
    if x <= 0:
        return 0.0
    hi = min(x, pi.domain_cutoff)
    num = integrate(pi.evaluate, 0.0, hi, breakpoints=pi.breakpoints)
    return min(1.0, max(0.0, num / pi.mass))


def target_quantile(pi, q):
    """Smallest x with F(x) >= q, from a dense cumulative table plus bisection."""
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    cutoff = pi.domain_cutoff
    xs = np.unique(np.concatenate([np.linspace(0.0, cutoff, 2049), np.asarray(pi.breakpoints)]))
    F = target_cdf_many(pi, xs)
    j = int(np.searchsorted(F, q))
    j = min(max(j, 1), len(xs) - 1)
    lo, hi = xs[j - 1], xs[j]
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if target_cdf(pi, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- sample-vs-target metrics ----------------------------------------------


def ks_distance(samples, pi):
    """sup_x |F_n(x) - F(x)| over the sample points (both one-sided gaps)."""
    v = samples.values
    n = samples.n
    F = target_cdf_many(pi, v)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def histogram_tv(samples, pi, bins):
    """Half the L1 distance between binned empirical and target masses on
    equal-width bins spanning [min sample, max(cutoff, max sample)]; target
    mass falling outside the binned range counts as discrepancy, so fully
    disjoint supports give 1."""
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    v = samples.values
    lo = float(v[0])
    hi = float(max(pi.domain_cutoff, v[-1]))
    if hi <= lo:
        hi = lo + 1e-9
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(v, bins=edges)
    emp = counts / samples.n
    F = target_cdf_many(pi, edges)
    tgt = np.diff(F)
    outside = F[0] + (1.0 - F[-1])
    return float(0.5 * (np.sum(np.abs(emp - tgt)) + outside))


# --- generator and invariance ------------------------------------------------


def _jump_term(mu, f, x):
    """int (f(x+z) - f(x)) mu(dz) for a single x."""
    lo_s, hi_s = f.support
    fx = float(f(x))
    total = 0.0
    for loc, mass in mu.atoms:
        total += mass * (float(f(x + loc)) - fx)
    d = mu.density
    if d is not None:
        a = max(0.0, lo_s - x)
        b = min(mu._upper_eff, hi_s - x)
        if b > a:
            pts = [float(p) for p in d.breakpoints if a < p < b]
            total += integrate(
                lambda z: np.asarray(d.pdf(z), dtype=float) * f(x + z),
                a,
                b,
                breakpoints=pts,
                abs_tol=1e-12,
            )
        total -= fx * mu.ac_mass
    return total


def generator_apply(phi, mu, f, x):
    """A f(x) = phi(x) f'(x) + int (f(x+z) - f(x)) mu(dz).

    ``phi`` is any drift evaluator (a DriftField or a plain callable)."""
    if x <= 0:
        raise ValueError(f"generator is defined for x > 0, got {x}")
    x = float(x)
    return float(phi(x)) * float(f.derivative(x)) + _jump_term(mu, f, x)


def _residual_breakpoints(pi, mu, f):
    lo_s, hi_s = f.support
    pts = {lo_s, hi_s}
    pts.update(pi.breakpoints)
    shifts = [loc for loc, _ in mu.atoms]
    if mu.density is not None:
        shifts.extend(float(b) for b in mu.density.breakpoints)
    for s in shifts:
        pts.add(lo_s - s)
        pts.add(hi_s - s)
    return sorted(pts)


def invariance_residual(pi, mu, f, phi=None):
    """Normalized integral of A f against the target over (0, cutoff].

    With ``phi=None`` the drift enters through the tail convolution itself
    (phi pi = -mu_bar * pi), avoiding the divide/multiply round trip; pass
    an explicit drift evaluator to test perturbed drifts.  Zero up to
    quadrature error certifies infinitesimal invariance.

    Integration uses a fixed panel layout, so the residual is exactly
    linear in f.
    """
    hi = min(pi.domain_cutoff, f.support[1])
    if hi <= 0:
        return 0.0

    if phi is None:
        drift_term = lambda x: -tail_convolution(mu, pi, x) * float(f.derivative(x))
    else:
        drift_term = lambda x: (
            float(phi(x))
            * float(f.derivative(x))
            * float(pi.evaluate(np.asarray(x)))
        )

    def integrand(xs):
        xs = np.asarray(xs, dtype=float)
        flat = np.ravel(xs)
        pi_vals = np.asarray(pi.evaluate(flat), dtype=float)
        out = np.empty(flat.shape)
        for i, x in enumerate(flat):
            out[i] = drift_term(float(x)) + pi_vals[i] * _jump_term(mu, f, float(x))
        return out.reshape(xs.shape)

    value = fixed_panel_integrate(
        integrand,
        0.0,
        hi,
        breakpoints=[b for b in _residual_breakpoints(pi, mu, f) if 0.0 < b < hi],
        max_width=hi / 96.0,
    )
    return value / pi.mass


def lag_autocorrelation(chronological_values, lags=(1, 2, 5, 10)):
    """Sample autocorrelation of a skeleton sequence at the given lags.

    Takes the values in chronological order (not an EmpiricalDistribution,
    which is sorted).  Returns a list of (lag, correlation) pairs.
    """
    v = np.asarray(chronological_values, dtype=float)
    v = v - v.mean()
    denom = float(np.dot(v, v))
    out = []
    for k in lags:
        k = int(k)
        if not 0 < k < len(v):
            continue
        out.append((k, float(np.dot(v[:-k], v[k:]) / denom)))
    return out


def histogram_modes(values, split, bin_width=0.1):
    """Locations of the two histogram peaks left/right of ``split``.

    The argmax bin center is refined by a parabola through the three bins
    around the peak, which removes most of the half-bin quantization."""
    values = np.asarray(values, dtype=float)
    edges = np.arange(0.0, float(np.max(values)) + bin_width, bin_width)
    h, _ = np.histogram(values, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])

    def refined(mask):
        idx = np.nonzero(mask)[0]
        i = idx[np.argmax(h[idx])]
        if 0 < i < len(h) - 1:
            denom = h[i - 1] - 2.0 * h[i] + h[i + 1]
            if denom < 0:
                return float(centers[i] + 0.5 * bin_width * (h[i - 1] - h[i + 1]) / denom)
        return float(centers[i])

    return refined(centers < split), refined(centers >= split)


def default_bumps(pi, levels=(0.1, 0.3, 0.5, 0.7, 0.9)):
    """Bumps centered at target quantiles, radius half the gap to the
    nearest edge of (0, cutoff)."""
    bumps = []
    for q in levels:
        c = target_quantile(pi, q)
        r = 0.5 * min(c, pi.domain_cutoff - c)
        bumps.append(BumpFunction(center=c, radius=r))
    return bumps


# --- truncation convergence ---------------------------------------------------


@dataclass(frozen=True)
class TruncationRow:
    n: int
    sup_err: float
    tail_mass: float

    @property
    def ratio(self):
        if self.tail_mass == 0.0:
            return 0.0
        return self.sup_err / self.tail_mass


@dataclass(frozen=True)
class TruncationReport:
    rows: tuple

    @property
    def bound_ok(self):
        """Ratios stay within 1.5x the ratio fitted at the smallest level."""
        base = self.rows[0].ratio
        if base == 0.0:
            return all(r.sup_err == 0.0 for r in self.rows)
        return all(r.ratio <= 1.5 * base for r in self.rows)


def truncation_report(pi, mu, n_list, grid):
    """Sup-distance between the drift and its jump-truncated version.

    For each level n the measure is restricted to (1/n, n); the report pairs
    sup_x |phi - phi_n| over the grid with the discarded tail mass
    mu((0, 1/n] u [n, inf)) and checks the proportionality bound."""
    grid = np.asarray(grid, dtype=float)
    phi_full = np.array([drift_cp(pi, mu, float(x)) for x in grid])
    rows = []
    for n in n_list:
        mu_n = truncate_measure(mu, n)
        phi_n = np.array([drift_cp(pi, mu_n, float(x)) for x in grid])
        sup_err = float(np.max(np.abs(phi_full - phi_n)))
        tail_mass = float(mu.total - mu_n.total)
        rows.append(TruncationRow(n=int(n), sup_err=sup_err, tail_mass=tail_mass))
    return TruncationReport(rows=tuple(rows))
