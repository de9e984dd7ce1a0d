import numpy as np
import pytest
import scipy.integrate as si

from llmc.drift import (
    DriftConsistencyError,
    DriftField,
    NonDifferentiablePointError,
    EvaluationOnlyWarning,
    build_drift_table,
    drift_alt,
    drift_alt_grid,
    drift_cp,
    drift_general,
    tail_convolution,
    truncate_measure,
    truncated_drift,
    write_drift_csv,
)
from llmc.measures import (
    DensityPart,
    InvalidMeasureError,
    LevyMeasure,
    LevyTriplet,
    SmallJumpPart,
    TargetDensity,
)


# --- tail convolution ---------------------------------------------------------


def test_tail_convolution_single_atom(pi_exp):
    # mu_bar(z) = 1 on (0, a), so the convolution is e^{-x}(e^{min(a,x)} - 1)
    for a in (0.5, 1.0, 4.0):
        mu = LevyMeasure(atoms=((a, 1.0),))
        for x in (0.5 * a, a, 2.0 * a):
            expect = np.exp(-x) * (np.exp(min(a, x)) - 1.0)
            assert tail_convolution(mu, pi_exp, x) == pytest.approx(expect, rel=1e-10)
            oracle = si.quad(lambda z: (z < a) * np.exp(-(x - z)), 0, x, points=[a] if a < x else None)[0]
            assert tail_convolution(mu, pi_exp, x) == pytest.approx(oracle, rel=1e-8)


def test_tail_convolution_exponential_pair(pi_exp, mu_exp):
    for x in (0.3, 1.0, 5.0, 15.0):
        assert tail_convolution(mu_exp, pi_exp, x) == pytest.approx(
            x * np.exp(-x), rel=1e-8
        )


def test_tail_convolution_vanishes_at_origin(pi_ns, mu_ns):
    # bounded by |mu| * x * max pi near 0, so ~1.7e-11 at x = 1e-12
    assert tail_convolution(mu_ns, pi_ns, 1e-12) == pytest.approx(0.0, abs=1e-10)


# --- drift, compound-Poisson form ----------------------------------------------


def test_drift_cp_atom_closed_form(pi_exp):
    for a in (0.5, 1.0, 4.0):
        mu = LevyMeasure(atoms=((a, 1.0),))
        for x in (a, 1.5 * a, 3.0 * a):
            assert drift_cp(pi_exp, mu, x) == pytest.approx(
                -(np.exp(a) - 1.0), rel=1e-9
            )


def test_drift_cp_exponential_closed_form(pi_exp, mu_exp):
    xs = np.geomspace(0.01, 20.0, 64)
    errs = [abs(drift_cp(pi_exp, mu_exp, float(x)) + x) for x in xs]
    assert max(errs) < 1e-6


def test_drift_cp_vanishes_at_origin(pi_ns, mu_ns):
    # |phi(x)| <= |mu| x sup pi / pi -> behaves like 17x near the origin
    values = [abs(drift_cp(pi_ns, mu_ns, 10.0**-k)) for k in range(1, 7)]
    assert all(v2 < v1 for v1, v2 in zip(values, values[1:]))
    assert values[-1] < 1e-4


def test_drift_cp_strictly_negative(pi_dw, mu_dw):
    for x in np.geomspace(1e-6, 10.5, 40):
        assert drift_cp(pi_dw, mu_dw, float(x)) < 0.0


def test_drift_cp_rejects_nonpositive_x(pi_exp, mu_exp):
    with pytest.raises(ValueError):
        drift_cp(pi_exp, mu_exp, 0.0)


# --- alternative representation --------------------------------------------------


def test_drift_alt_exponential(pi_exp, mu_exp):
    assert drift_alt(pi_exp, mu_exp, 1.0) == pytest.approx(-1.0, abs=1e-8)


def test_drift_alt_atom(pi_exp):
    mu = LevyMeasure(atoms=((1.0, 1.0),))
    assert drift_alt(pi_exp, mu, 0.5) == pytest.approx(-(np.exp(0.5) - 1.0), rel=1e-9)


def test_drift_alt_vanishes_at_origin(pi_exp, mu_exp):
    assert drift_alt(pi_exp, mu_exp, 1e-9) == pytest.approx(0.0, abs=1e-8)


def test_representation_equivalence_examples(pi_dw, mu_dw, pi_ns, mu_ns):
    for pi, mu in ((pi_dw, mu_dw), (pi_ns, mu_ns)):
        xs = np.geomspace(0.05, 10.0, 32)
        alt = drift_alt_grid(pi, mu, xs)
        for x, a in zip(xs, alt):
            cp = drift_cp(pi, mu, float(x))
            assert abs(cp - a) < 1e-6 * (1.0 + abs(cp))


def test_representation_equivalence_random_pairs():
    # built-in families: exponential-type targets (optionally with an
    # indicator plateau) against atom + exponential-density measures
    rng = np.random.default_rng(424242)
    for trial in range(20):
        rate = rng.uniform(0.4, 1.6)
        plateau = rng.random() < 0.5
        lo = rng.uniform(0.5, 2.0)
        hi = lo + rng.uniform(0.5, 2.0)
        if plateau:
            def density(x, r=rate, lo=lo, hi=hi):
                x = np.asarray(x, dtype=float)
                return np.exp(-r * x) + ((x > lo) & (x < hi)) * 1.0

            pi = TargetDensity(evaluate=density, breakpoints=(lo, hi))
        else:
            pi = TargetDensity(
                evaluate=lambda x, r=rate: np.exp(-r * np.asarray(x, dtype=float))
            )
        atoms = []
        if rng.random() < 0.7:
            atoms.append((rng.uniform(0.3, 5.0), rng.uniform(0.5, 2.0)))
        dens = None
        if rng.random() < 0.7 or not atoms:
            s, r2 = rng.uniform(0.3, 2.0), rng.uniform(0.5, 1.5)
            dens = DensityPart(pdf=lambda z, s=s, r2=r2: s * np.exp(-r2 * np.asarray(z, dtype=float)))
        mu = LevyMeasure(atoms=tuple(atoms), density=dens)
        xs = np.geomspace(0.05, min(10.0, pi.domain_cutoff * 0.9), 128)
        alt = drift_alt_grid(pi, mu, xs)
        for x, a in zip(xs, alt):
            cp = drift_cp(pi, mu, float(x))
            assert abs(cp - a) < 1e-6 * (1.0 + abs(cp)), f"trial {trial} at x={x}"


# --- general triplet drift ---------------------------------------------------------


def test_drift_general_reduces_bitwise(pi_ns, mu_ns):
    triplet = LevyTriplet(gamma=0.0, sigma_sq=0.0, mu=mu_ns)
    assert drift_general(pi_ns, triplet, 3.0) == drift_cp(pi_ns, mu_ns, 3.0)


def test_drift_general_location_term(pi_exp):
    triplet = LevyTriplet(gamma=1.0, sigma_sq=0.0, mu=LevyMeasure(atoms=((1.0, 1.0),)))
    for x in (1.0, 2.0, 5.0):
        assert drift_general(pi_exp, triplet, x) == pytest.approx(
            -(np.e - 1.0) - 1.0, rel=1e-9
        )


def test_drift_general_gaussian_langevin():
    pi = TargetDensity(evaluate=lambda x: np.exp(-np.asarray(x, dtype=float) ** 2 / 2.0))
    triplet = LevyTriplet(gamma=0.0, sigma_sq=2.0, mu=None)
    for x in (0.5, 1.3, 2.0):
        assert drift_general(pi, triplet, x) == pytest.approx(-x, abs=1e-5)


def test_drift_general_breakpoint_derivative_error(pi_ns):
    triplet = LevyTriplet(gamma=0.0, sigma_sq=1.0, mu=None)
    with pytest.raises(NonDifferentiablePointError):
        drift_general(pi_ns, triplet, 2.0)


def test_drift_general_small_jump_part(pi_exp):
    # rho with single tail e^{-z}: double tail e^{-x}, and (rho_dd * pi)(x)
    # = x e^{-x}, so the derivative term is (1 - x)
    rho = SmallJumpPart(tail=lambda z: np.exp(-np.asarray(z, dtype=float)))
    assert rho.double_tail(2.0) == pytest.approx(np.exp(-2.0), rel=1e-9)
    triplet = LevyTriplet(gamma=0.0, sigma_sq=0.0, mu=None, rho=rho)
    with pytest.warns(EvaluationOnlyWarning):
        got = drift_general(pi_exp, triplet, 2.0)
    assert got == pytest.approx(1.0 - 2.0, abs=1e-4)


def test_triplet_must_not_be_deterministic():
    with pytest.raises(ValueError):
        LevyTriplet(gamma=1.0, sigma_sq=0.0, mu=None, rho=None)


# --- tabulated field -----------------------------------------------------------


def test_build_drift_table_minimum_points(pi_exp, mu_exp):
    with pytest.raises(ValueError):
        build_drift_table(pi_exp, mu_exp, 1)


def test_drift_table_spot_value_non_smooth(field_ns, pi_ns, mu_ns):
    assert field_ns(3.0) == pytest.approx(drift_cp(pi_ns, mu_ns, 3.0), abs=1e-6)
    assert np.all(field_ns.values < 0.0)


def test_drift_table_exponential_reproduces_linear_drift(pi_exp, mu_exp):
    field = build_drift_table(pi_exp, mu_exp, 4096)
    xs = np.geomspace(0.01, 20.0, 128)
    assert np.max(np.abs(field(xs) + xs)) < 1e-6


def test_drift_table_interpolation_quality(field_dw, pi_dw, mu_dw):
    rng = np.random.default_rng(8)
    probes = rng.uniform(field_dw.grid[0], field_dw.grid[-1], 64)
    for p in probes:
        exact = drift_cp(pi_dw, mu_dw, float(p))
        assert abs(field_dw(float(p)) - exact) < 1e-4 * (1e-9 + abs(exact))


def test_drift_table_negativity_guard(pi_exp, mu_exp):
    with pytest.raises(DriftConsistencyError):
        DriftField(
            grid=np.geomspace(1e-9, 10.0, 64),
            values=np.linspace(-1.0, 1.0, 64),
            pi=pi_exp,
            mu=mu_exp,
        )


def test_drift_table_outside_grid(field_exp, pi_exp, mu_exp):
    # above the grid the last value is held; below it falls back to exact
    assert field_exp(field_exp.grid[-1] + 5.0) == field_exp.values[-1]
    tiny = field_exp.grid[0] / 2.0
    assert field_exp(tiny) == pytest.approx(drift_cp(pi_exp, mu_exp, tiny), rel=1e-9)


def test_drift_csv_export(field_exp, tmp_path):
    path = tmp_path / "drift.csv"
    write_drift_csv(field_exp, path)
    rows = path.read_text().splitlines()
    assert rows[0] == "x,phi"
    xs, phis = zip(*(map(float, r.split(",")) for r in rows[1:]))
    assert np.allclose(xs, field_exp.grid)
    assert np.allclose(phis, field_exp.values)


# --- truncation -----------------------------------------------------------------


def test_truncation_atom_filtering(pi_exp):
    mu = LevyMeasure(atoms=((4.0, 1.0), (8.0, 2.0)))
    kept = truncate_measure(mu, 5)
    assert kept.atoms == ((4.0, 1.0),)
    # and the truncated drift uses only the kept atom
    assert truncated_drift(pi_exp, mu, 5, 6.0) == pytest.approx(
        drift_cp(pi_exp, LevyMeasure(atoms=((4.0, 1.0),)), 6.0), rel=1e-12
    )


def test_truncation_identity_when_support_inside(pi_exp):
    mu = LevyMeasure(atoms=((4.0, 1.0),))
    for x in (1.0, 4.0, 7.0):
        assert truncated_drift(pi_exp, mu, 10, x) == pytest.approx(
            drift_cp(pi_exp, mu, x), rel=1e-12
        )


def test_trivial_truncation_rejected():
    mu = LevyMeasure(atoms=((8.0, 2.0),))
    with pytest.raises(InvalidMeasureError):
        truncate_measure(mu, 2)


def test_truncation_monotone(pi_dw, mu_dw):
    # more retained mass pushes the drift down: phi_n >= phi_{n+1} >= phi
    xs = np.geomspace(0.1, 10.0, 24)
    prev = None
    for n in (2, 4, 8, 16):
        cur = np.array([truncated_drift(pi_dw, mu_dw, n, float(x)) for x in xs])
        full = np.array([drift_cp(pi_dw, mu_dw, float(x)) for x in xs])
        assert np.all(cur >= full - 1e-12 * np.abs(full))
        if prev is not None:
            assert np.all(prev >= cur - 1e-12 * np.abs(cur))
        prev = cur
