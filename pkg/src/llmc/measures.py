"""Target densities and finite jump measures on the positive half-line.

A :class:`TargetDensity` is an unnormalized density pi on (0, inf) with an
explicit list of breakpoints (where it may jump or kink) and a truncation
cutoff for quadrature.  A :class:`LevyMeasure` is a finite measure given as
atoms plus an optional absolutely continuous part; it drives the jump part of
the dynamics, so the key derived objects are its integrated tail
``mu_bar(x) = mu((x, inf))``, its total mass (the jump intensity), its mean
jump size, and an inverse-CDF sampler for the normalized measure.

The validators check the standing assumptions under which the target is the
unique limiting law of the simulated process: exponential tail and controlled
origin behaviour of pi, and spectral positivity plus a finite first moment of
the jump measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .quadrature import QuadratureError, gauss_panel, integrate

__all__ = [
    "InvalidMeasureError",
    "MalformedDensityError",
    "AssumptionViolationError",
    "TargetDensity",
    "DensityPart",
    "LevyMeasure",
    "LevyTriplet",
    "SmallJumpPart",
    "Finding",
    "ValidationReport",
    "integrated_tail",
    "signed_integrated_tail",
    "total_mass",
    "mean_jump",
    "first_moment",
    "sample_jump",
    "sample_jumps",
    "validate_b1",
    "validate_b2",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


class InvalidMeasureError(Exception):
    """The jump measure is unusable (non-finite or non-positive mass, ...)."""


class MalformedDensityError(Exception):
    """The target density evaluator failed or is not integrable."""


class AssumptionViolationError(Exception):
    """A standing assumption (finite first moment, ...) is violated."""


# --- target density -------------------------------------------------------


def _doubling_cutoff(f, start):
    """Smallest x with f(x) < 1e-16 * max f, by doubling then bisection."""
    try:
        hi = start
        best_max = 0.0
        for _ in range(64):
            xs = np.linspace(hi / 2.0, hi, 64)
            best_max = max(best_max, float(np.max(f(xs))))
            if best_max > 0.0 and float(f(np.asarray(hi))) < 1e-16 * best_max:
                break
            hi *= 2.0
        else:
            raise MalformedDensityError(
                "no quadrature cutoff found: density does not decay"
            )
        threshold = 1e-16 * best_max
        lo = hi / 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if float(f(np.asarray(mid))) < threshold:
                hi = mid
            else:
                lo = mid
        return hi
    except MalformedDensityError:
        raise
    except Exception as exc:  # evaluator blew up (overflow, domain, ...)
        raise MalformedDensityError(f"density evaluation failed: {exc}") from exc


@dataclass(eq=False)
class TargetDensity:
    """Unnormalized target density on (0, inf).

    Parameters
    ----------
    evaluate : callable
        Vectorized map x -> pi(x) >= 0 for x > 0.
    breakpoints : sequence of float
        Strictly increasing positive points where pi may be discontinuous or
        non-differentiable.  Empty if smooth.
    tail_rate_hint : float, optional
        A rate a > 0 such that pi(x) * exp(a x) stays bounded.
    domain_cutoff : float, optional
        Truncation point for quadrature; beyond it pi is treated as zero.
        Defaults to the smallest x with pi(x) < 1e-16 * max pi, located by a
        doubling search.
    """

    evaluate: object
    breakpoints: tuple = ()
    tail_rate_hint: float | None = None
    domain_cutoff: float | None = None

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        if any(b <= 0 for b in bp):
            raise MalformedDensityError("breakpoints must be strictly positive")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise MalformedDensityError("breakpoints must be strictly increasing")
        self.breakpoints = bp
        if self.domain_cutoff is None:
            start = max(1.0, 2.0 * max(bp, default=0.0))
            self.domain_cutoff = _doubling_cutoff(self.evaluate, start)
        else:
            self.domain_cutoff = float(self.domain_cutoff)
            if self.domain_cutoff <= 0:
                raise MalformedDensityError("domain_cutoff must be positive")
            if self.domain_cutoff <= max(bp, default=0.0):
                raise MalformedDensityError("domain_cutoff must exceed all breakpoints")

    def __call__(self, x):
        return self.evaluate(x)

    @cached_property
    def mass(self):
        """Integral of pi over (0, domain_cutoff]; must be finite positive."""
        try:
            m = integrate(
                self.evaluate, 0.0, self.domain_cutoff, breakpoints=self.breakpoints
            )
        except QuadratureError as exc:
            raise MalformedDensityError(f"density is not integrable: {exc}") from exc
        if not math.isfinite(m) or m <= 0.0:
            raise MalformedDensityError(f"density mass is {m}")
        return m


# --- jump measures --------------------------------------------------------


@dataclass(eq=False)
class DensityPart:
    """Absolutely continuous part of a jump measure.

    ``pdf`` is a vectorized density on (0, upper).  ``tail`` is an optional
    closed-form evaluator of the integrated tail ``T(x) = int_x^upper pdf``
    valid for x >= 0; when absent the tail is computed numerically from a
    precomputed cell decomposition (which also backs inverse-CDF sampling).
    """

    pdf: object
    tail: object | None = None
    upper: float = math.inf
    breakpoints: tuple = ()


@dataclass(eq=False)
class LevyMeasure:
    """Finite jump measure: atoms plus an optional density part.

    Atom masses must be positive.  Atom locations are recorded as given so
    the b2 validator can report misplaced (non-positive) atoms; all dynamics
    entry points require ``validate_b2`` to pass first.
    """

    atoms: tuple = ()
    density: DensityPart | None = None

    def __post_init__(self):
        atoms = tuple((float(loc), float(mass)) for loc, mass in self.atoms)
        for loc, mass in atoms:
            if mass <= 0 or not math.isfinite(mass):
                raise InvalidMeasureError(f"atom mass must be positive, got {mass}")
            if not math.isfinite(loc) or loc == 0.0:
                raise InvalidMeasureError(f"atom location must be finite nonzero, got {loc}")
        self.atoms = tuple(sorted(atoms))
        if self.atoms or self.density is not None:
            pass
        else:
            raise InvalidMeasureError("measure has neither atoms nor a density part")

    @cached_property
    def _atom_locs(self):
        return np.array([a[0] for a in self.atoms], dtype=float)

    @cached_property
    def _atom_masses(self):
        return np.array([a[1] for a in self.atoms], dtype=float)

    @cached_property
    def _upper_eff(self):
        """Finite upper end used for numeric work on the density part."""
        d = self.density
        if d is None:
            return 0.0
        if math.isfinite(d.upper):
            return float(d.upper)
        start = max(1.0, 2.0 * max(d.breakpoints, default=0.0))
        hi = start
        best_max = 0.0
        for _ in range(64):
            xs = np.linspace(hi / 2.0, hi, 64)
            vals = np.asarray(d.pdf(xs), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise InvalidMeasureError("jump density evaluated to a non-finite value")
            best_max = max(best_max, float(np.max(vals)))
            edge = float(d.pdf(np.asarray(hi)))
            if best_max > 0.0 and edge < 1e-16 * best_max and hi * edge < 1e-16 * best_max:
                return hi
            hi *= 2.0
        raise InvalidMeasureError("jump density does not decay; measure looks infinite")

    @cached_property
    def _cells(self):
        """(edges, cumulative) of the density part for tails and sampling.

        Edges subdivide (0, upper_eff] at declared breakpoints and are
        bisected until a 15-point panel agrees with its refinement; the
        cumulative integrals at the edges are then accurate to roughly
        machine precision, and partial cells can be integrated with a single
        panel.
        """
        d = self.density
        if d is None:
            return np.array([0.0]), np.array([0.0]), np.array([0.0])
        upper = self._upper_eff
        base = {0.0, upper}
        base.update(float(b) for b in d.breakpoints if 0.0 < b < upper)
        # geometric pre-split keeps bisection depth bounded when the support
        # spans many orders of magnitude
        t = upper / 2.0
        while t > max(upper * 2.0 ** -40, 1e-12):
            base.add(t)
            t /= 2.0
        base = sorted(base)
        edges = [0.0]
        sums = [0.0]

        def refine(lo, hi, whole, depth):
            mid = 0.5 * (lo + hi)
            left = gauss_panel(d.pdf, lo, mid)
            right = gauss_panel(d.pdf, mid, hi)
            if not (math.isfinite(left) and math.isfinite(right)):
                raise InvalidMeasureError("non-finite quadrature in jump density")
            max_width = max(0.5 * lo, upper * 2.0 ** -40, 1e-12)
            ok = abs(left + right - whole) <= 1e-13 * (1.0 + abs(left + right))
            if ok and hi - lo <= max_width:
                edges.append(mid)
                sums.append(left)
                edges.append(hi)
                sums.append(right)
                return
            if depth >= 48:
                raise InvalidMeasureError(
                    "jump density cell decomposition did not converge "
                    f"near [{lo:g}, {hi:g}] (singular density parts need a "
                    "closed-form tail evaluator)"
                )
            refine(lo, mid, left, depth + 1)
            refine(mid, hi, right, depth + 1)

        for lo, hi in zip(base[:-1], base[1:]):
            refine(lo, hi, gauss_panel(d.pdf, lo, hi), 0)
        cells = np.array(edges)
        per_cell = np.array(sums[1:])
        cum = np.concatenate([[0.0], np.cumsum(per_cell)])
        # tail sums accumulated from the far end: evaluating the integrated
        # tail as rev[k] + partial avoids the catastrophic cancellation of
        # mass - cum deep in the tail
        rev = np.concatenate([np.cumsum(per_cell[::-1])[::-1], [0.0]])
        return cells, cum, rev

    @cached_property
    def ac_mass(self):
        d = self.density
        if d is None:
            return 0.0
        if d.tail is not None:
            m = float(d.tail(np.asarray(0.0)))
        else:
            m = float(self._cells[2][0])
        if not math.isfinite(m) or m < 0.0:
            raise InvalidMeasureError(f"density part has mass {m}")
        return m

    @cached_property
    def total(self):
        t = float(np.sum(self._atom_masses)) + self.ac_mass
        if not math.isfinite(t) or t <= 0.0:
            raise InvalidMeasureError(f"total mass is {t}")
        return t

    def _density_tail(self, z):
        """Vectorized integrated tail of the density part at z >= 0."""
        d = self.density
        z = np.asarray(z, dtype=float)
        if d is None:
            return np.zeros(z.shape)
        if d.tail is not None:
            return np.clip(np.asarray(d.tail(z), dtype=float), 0.0, None)
        cells, cum, rev = self._cells
        out = np.empty(z.shape)
        below = z <= 0.0
        above = z >= cells[-1]
        mid = ~(below | above)
        out[below] = self.ac_mass
        out[above] = 0.0
        if np.any(mid):
            zm = z[mid]
            k = np.clip(np.searchsorted(cells, zm, side="right") - 1, 0, len(cells) - 2)
            hi = cells[k + 1]
            half = 0.5 * (hi - zm)
            nodes = zm[:, None] + half[:, None] * (1.0 + _GL_NODES[None, :])
            vals = np.asarray(d.pdf(nodes.ravel()), dtype=float).reshape(nodes.shape)
            partial = half * (vals @ _GL_WEIGHTS)
            out[mid] = rev[k + 1] + partial
        return out

    def tail(self, z):
        """Vectorized mu((z, inf)) for z >= 0 (atoms counted strictly above z)."""
        z = np.asarray(z, dtype=float)
        out = self._density_tail(z)
        if len(self.atoms):
            out = out + (self._atom_masses[None, :] * (self._atom_locs[None, :] > z.reshape(-1, 1))).sum(axis=1).reshape(z.shape)
        return out

    def restrict(self, lo, hi):
        """The trace of the measure on the open interval (lo, hi)."""
        atoms = tuple(a for a in self.atoms if lo < a[0] < hi)
        density = None
        d = self.density
        if d is not None:
            upper = min(d.upper, hi)
            pdf = d.pdf
            new_pdf = lambda z: pdf(z) * ((np.asarray(z) > lo) & (np.asarray(z) < hi))
            new_tail = None
            if d.tail is not None:
                old_tail = d.tail
                cap = float(old_tail(np.asarray(hi))) if hi < d.upper else 0.0
                new_tail = lambda z: np.clip(
                    np.asarray(old_tail(np.maximum(np.asarray(z, dtype=float), lo)), dtype=float) - cap,
                    0.0,
                    None,
                )
            bps = tuple(sorted({float(b) for b in d.breakpoints if lo < b < hi} | {float(lo)}))
            density = DensityPart(pdf=new_pdf, tail=new_tail, upper=upper, breakpoints=bps)
            if math.isfinite(upper) and upper <= lo:
                density = None
        if not atoms and density is None:
            raise InvalidMeasureError(f"restriction to ({lo:g}, {hi:g}) is trivial")
        restricted = LevyMeasure(atoms=atoms, density=density)
        if density is not None and restricted.ac_mass <= 0.0 and not atoms:
            raise InvalidMeasureError(f"restriction to ({lo:g}, {hi:g}) is trivial")
        return restricted


@dataclass(eq=False)
class SmallJumpPart:
    """Evaluation-only small-jump component with finite (|z| ^ z^2)-moment.

    Specified through its single integrated tail ``z -> rho((z, inf))``,
    which may blow up toward 0 for infinite-activity parts.  Only the drift
    evaluator consumes it (through the double integrated tail); it can never
    be simulated here.
    """

    tail: object
    upper: float = math.inf

    @cached_property
    def _upper_eff(self):
        if math.isfinite(self.upper):
            return float(self.upper)
        hi = 1.0
        scale = 1.0 + abs(float(self.tail(np.asarray(1.0))))
        for _ in range(64):
            if hi * abs(float(self.tail(np.asarray(hi)))) < 1e-16 * scale:
                return hi
            hi *= 2.0
        raise InvalidMeasureError("small-jump tail does not decay")

    def double_tail(self, z):
        """Vectorized double integrated tail: int_z^inf rho((t, inf)) dt."""
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        hi = self._upper_eff
        out = np.empty(zs.shape)
        for i, zi in enumerate(zs):
            out[i] = integrate(self.tail, zi, hi, abs_tol=1e-12) if zi < hi else 0.0
        return float(out[0]) if np.isscalar(z) else out


@dataclass(eq=False)
class LevyTriplet:
    """Characteristic triplet (location, Gaussian part, jump measure).

    ``mu`` is the finite-activity jump part; ``rho`` optionally carries a
    small-jump part with finite (|z| ^ z^2)-moment and is supported for drift
    evaluation only, never for simulation.
    """

    gamma: float = 0.0
    sigma_sq: float = 0.0
    mu: LevyMeasure | None = None
    rho: object | None = None

    def __post_init__(self):
        if self.sigma_sq < 0:
            raise ValueError("sigma_sq must be nonnegative")
        if self.sigma_sq == 0.0 and self.mu is None and self.rho is None:
            raise ValueError("purely deterministic triplet: need sigma_sq > 0 or jumps")


# --- operations -----------------------------------------------------------


def integrated_tail(mu, x):
    """mu((x, inf)) for x > 0: atom masses above x plus the density tail."""
    if x <= 0:
        raise ValueError(f"integrated_tail requires x > 0, got {x}")
    try:
        return float(mu.tail(np.asarray(float(x))))
    except QuadratureError as exc:
        raise InvalidMeasureError(f"tail quadrature failed: {exc}") from exc


def signed_integrated_tail(mu, x):
    """sgn(x) * mu_bar(x); zero for x <= 0 when the measure sits on (0, inf)."""
    x = float(x)
    if x > 0:
        return integrated_tail(mu, x)
    if x == 0:
        return 0.0
    neg = float(np.sum(mu._atom_masses[mu._atom_locs < x])) if len(mu.atoms) else 0.0
    return -neg if neg else 0.0


def total_mass(mu):
    """|mu|; this is the intensity of the simulator's Poisson clock."""
    return mu.total


def _ac_first_moment(mu):
    d = mu.density
    if d is None:
        return 0.0
    f = lambda z: np.asarray(d.pdf(z), dtype=float) * z
    upper = mu._upper_eff
    moment = integrate(f, 0.0, upper, breakpoints=d.breakpoints, abs_tol=1e-12)
    if not math.isfinite(upper) or math.isfinite(d.upper):
        return moment
    return moment


def _moment_diverges(mu):
    """Heuristic divergence check of int z mu(dz) for infinite-support densities."""
    d = mu.density
    if d is None or math.isfinite(d.upper):
        return False
    upper = mu._upper_eff
    f = lambda z: np.asarray(d.pdf(z), dtype=float) * z
    hi = upper
    windows = []
    for _ in range(4):
        lo = hi / 2.0
        windows.append(integrate(f, lo, hi, breakpoints=d.breakpoints, abs_tol=1e-14))
        hi = lo
    windows = windows[::-1]  # increasing z order
    scale = abs(windows[-1]) + abs(windows[0])
    if scale < 1e-12:
        return False
    ratios = [b / a for a, b in zip(windows[:-1], windows[1:]) if a > 0]
    return bool(ratios) and min(ratios) >= 0.95


def first_moment(mu):
    """int z mu(dz).  Raises AssumptionViolationError if it diverges."""
    if len(mu.atoms) and np.any(mu._atom_locs <= 0):
        raise AssumptionViolationError("first moment undefined: non-positive atoms")
    if _moment_diverges(mu):
        raise AssumptionViolationError("first moment of the jump measure diverges")
    atom_part = float(np.dot(mu._atom_locs, mu._atom_masses)) if len(mu.atoms) else 0.0
    return atom_part + _ac_first_moment(mu)


def mean_jump(mu):
    """Mean jump size E xi = int z mu(dz) / |mu|."""
    return first_moment(mu) / mu.total


def sample_jumps(mu, rng, n):
    """Draw ``n`` i.i.d. jump sizes from mu / |mu| (vectorized).

    Components are chosen proportionally to mass from a single uniform per
    draw; the density part is inverted on its precomputed monotone cell grid
    (binary search, then Newton refinement inside the bracketing cell).
    """
    total = mu.total
    u = rng.random(n)
    c = u * total
    atom_masses = mu._atom_masses
    atom_cum = np.cumsum(atom_masses) if len(mu.atoms) else np.zeros(0)
    a_tot = atom_cum[-1] if len(atom_cum) else 0.0
    out = np.empty(n)
    is_atom = c < a_tot
    if np.any(is_atom):
        idx = np.searchsorted(atom_cum, c[is_atom], side="right")
        out[is_atom] = mu._atom_locs[np.clip(idx, 0, len(atom_cum) - 1)]
    take_density = ~is_atom
    if np.any(take_density):
        d = mu.density
        if d is None:
            # float roundoff put a draw past the atom mass; clamp to last atom
            out[take_density] = mu._atom_locs[-1]
        else:
            cd = np.clip(c[take_density] - a_tot, 0.0, mu.ac_mass * (1.0 - 1e-15))
            out[take_density] = _invert_density_cdf(mu, cd)
    return out


def _invert_density_cdf(mu, cd):
    d = mu.density
    cells, cum, _ = mu._cells
    if d.tail is not None:
        # cumulative values at the numeric cell edges, from the closed form
        cum = mu.ac_mass - np.clip(np.asarray(d.tail(cells), dtype=float), 0.0, None)
        cum[0] = 0.0
    k = np.clip(np.searchsorted(cum, cd, side="right") - 1, 0, len(cells) - 2)
    z0 = cells[k]
    z1 = cells[k + 1]
    c0 = cum[k]
    c1 = cum[k + 1]
    dm = np.maximum(c1 - c0, 1e-300)
    z = z0 + (cd - c0) / dm * (z1 - z0)
    width = z1 - z0
    for _ in range(3):
        cdf_z = mu.ac_mass - mu._density_tail(z)
        dens = np.asarray(d.pdf(z), dtype=float)
        step = np.where(dens > 1e-12 * dm / np.maximum(width, 1e-300), (cdf_z - cd) / np.maximum(dens, 1e-300), 0.0)
        z = np.clip(z - step, z0 + 1e-15 * width, z1 - 1e-15 * width)
    return z


def sample_jump(mu, rng):
    """One draw from the normalized jump measure."""
    return float(sample_jumps(mu, rng, 1)[0])


# --- validators -----------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    name: str
    status: str  # PASS | WARN | FAIL
    message: str
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple

    @property
    def status(self):
        order = {"PASS": 0, "WARN": 1, "FAIL": 2}
        worst = max(self.findings, key=lambda f: order[f.status])
        return worst.status

    @property
    def ok(self):
        return self.status != "FAIL"

    def summary(self):
        lines = [f"[{f.status}] {f.name}: {f.message}" for f in self.findings]
        return "\n".join(lines)


def _fit_slope(xs, ys):
    A = np.vstack([xs, np.ones_like(xs)]).T
    sol, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(sol[0])


def validate_b1(pi):
    """Check the target-density assumption: exponential tail, bounded
    origin ratio, positivity.

    Returns a report with three findings.  Tail decay is classified from
    log pi on the last decade before the cutoff: slopes fitted on the two
    half-windows must agree within 10% for PASS; accelerating decay (the
    limit pi(x) e^{a x} is 0 for every a) gives WARN; decelerating decay or
    growth gives FAIL.
    """
    findings = []
    cutoff = pi.domain_cutoff

    # (i) tail
    try:
        xs = np.linspace(cutoff / 10.0, cutoff, 64)
        vals = np.asarray(pi.evaluate(xs), dtype=float)
    except Exception as exc:
        raise MalformedDensityError(f"density evaluation failed on the tail window: {exc}") from exc
    good = np.isfinite(vals) & (vals > 0.0)
    if good.sum() < 48:
        findings.append(
            Finding("b1-tail", "FAIL", "density vanishes on much of the tail window")
        )
    else:
        logv = np.log(vals[good])
        xg = xs[good]
        width = xg[-1] - xg[0]
        halves = xg <= xg[0] + 0.5 * width
        s_full = _fit_slope(xg, logv)
        s1 = _fit_slope(xg[halves], logv[halves])
        s2 = _fit_slope(xg[~halves], logv[~halves])
        alpha = -s_full
        linear = abs(s2 - s1) <= 0.1 * max(abs(s_full), 1e-12)
        if linear and alpha > 0:
            findings.append(
                Finding(
                    "b1-tail",
                    "PASS",
                    f"exponential tail with rate ~{alpha:.4g}",
                    {"alpha_hat": alpha},
                )
            )
        elif linear:
            findings.append(
                Finding("b1-tail", "FAIL", "tail does not decay exponentially", {"alpha_hat": alpha})
            )
        else:
            # classify from the end of the window, where the decay regime
            # is visible even for multimodal densities
            q3 = (xg > xg[0] + 0.5 * width) & (xg <= xg[0] + 0.75 * width)
            q4 = xg > xg[0] + 0.75 * width
            s3 = _fit_slope(xg[q3], logv[q3])
            s4 = _fit_slope(xg[q4], logv[q4])
            data = {"slope_q3": s3, "slope_q4": s4}
            if s4 >= 0.0:
                findings.append(
                    Finding("b1-tail", "FAIL", "density does not decay toward the cutoff", data)
                )
            elif s4 < s3:
                findings.append(
                    Finding(
                        "b1-tail",
                        "WARN",
                        "super-exponential tail: decay accelerates, the tail limit is 0 "
                        "for every exponential rate",
                        data,
                    )
                )
            else:
                findings.append(
                    Finding("b1-tail", "FAIL", "sub-exponential tail: decay decelerates", data)
                )

    # (ii) origin: r(x) = int_0^x pi / (x pi(x)) should stay bounded
    try:
        r_values = []
        for x in [10.0 ** (-k) for k in range(1, 7)]:
            num = integrate(pi.evaluate, 0.0, x, breakpoints=pi.breakpoints)
            den = x * float(pi.evaluate(np.asarray(x)))
            r_values.append(num / den if den > 0 else math.inf)
    except QuadratureError as exc:
        raise MalformedDensityError(f"origin quadrature failed: {exc}") from exc
    r = np.array(r_values)
    increasing = bool(np.all(np.diff(r) > 0))
    diverges = (not np.all(np.isfinite(r))) or (increasing and r[-1] > 10.0 * r[0])
    if diverges:
        findings.append(
            Finding("b1-origin", "FAIL", "int_0^x pi / (x pi(x)) diverges toward the origin", {"r": r_values})
        )
    else:
        findings.append(
            Finding("b1-origin", "PASS", f"origin ratio stabilizes near {r[-1]:.4g}", {"r": r_values})
        )

    # (iii) positivity on a log-spaced grid
    grid = np.geomspace(max(1e-9, 1e-9 * cutoff), cutoff, 128)
    vals = np.asarray(pi.evaluate(grid), dtype=float)
    if np.all(np.isfinite(vals)) and np.all(vals > 0.0):
        findings.append(Finding("b1-positivity", "PASS", "density positive on the sampled grid"))
    else:
        bad = grid[~(np.isfinite(vals) & (vals > 0.0))]
        findings.append(
            Finding(
                "b1-positivity",
                "FAIL",
                f"density non-positive near x={bad[0]:.4g}",
                {"bad_points": bad[:8].tolist()},
            )
        )
    return ValidationReport(tuple(findings))


def validate_b2(mu):
    """Check the jump-measure assumption: positive support, finite mass,
    finite first moment.  Failures become findings, not exceptions."""
    findings = []
    if len(mu.atoms) and np.any(mu._atom_locs <= 0):
        locs = mu._atom_locs[mu._atom_locs <= 0]
        findings.append(
            Finding("b2-support", "FAIL", f"atom at {locs[0]:g} violates spectral positivity")
        )
    else:
        findings.append(Finding("b2-support", "PASS", "all jumps are upward"))

    try:
        t = mu.total
        findings.append(Finding("b2-mass", "PASS", f"total mass {t:.6g}", {"total_mass": t}))
    except InvalidMeasureError as exc:
        findings.append(Finding("b2-mass", "FAIL", str(exc)))
        return ValidationReport(tuple(findings))

    try:
        m1 = first_moment(mu)
        findings.append(
            Finding(
                "b2-moment",
                "PASS",
                f"finite first moment {m1:.6g} (mean jump {m1 / t:.6g})",
                {"first_moment": m1},
            )
        )
    except AssumptionViolationError as exc:
        findings.append(Finding("b2-moment", "FAIL", str(exc)))
    return ValidationReport(tuple(findings))
