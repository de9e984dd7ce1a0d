import numpy as np
import pytest
import scipy.integrate as si

from llmc.diagnostics import (
    BumpFunction,
    EmpiricalDistribution,
    default_bumps,
    generator_apply,
    histogram_modes,
    histogram_tv,
    invariance_residual,
    ks_distance,
    target_cdf,
    target_cdf_many,
    target_quantile,
    truncation_report,
)
from llmc.drift import drift_cp
from llmc.measures import LevyMeasure


# --- empirical distribution -----------------------------------------------------


def test_empirical_requires_sorted_positive():
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.array([-1.0, 1.0]))
    emp = EmpiricalDistribution.from_samples(np.array([3.0, 1.0, 2.0]))
    assert emp.values.tolist() == [1.0, 2.0, 3.0]


def test_ecdf_exact_at_sample_points():
    emp = EmpiricalDistribution(np.array([1.0, 2.0, 3.0, 4.0]))
    for i, v in enumerate(emp.values, start=1):
        assert emp.ecdf(v) == i / emp.n


# --- bump functions ---------------------------------------------------------------


def test_bump_support_and_smoothness():
    f = BumpFunction(center=3.0, radius=1.0)
    assert f.support == (2.0, 4.0)
    assert f(2.0) == 0.0 and f(4.0) == 0.0
    assert f(3.0) == pytest.approx(np.exp(-1.0))
    assert f(2.0 + 1e-9) < 1e-200  # flat approach to zero
    # derivative: positive left of center, negative right
    assert f.derivative(2.5) > 0 > f.derivative(3.5)
    assert f.derivative(3.0) == 0.0


def test_bump_must_fit_in_domain():
    with pytest.raises(ValueError):
        BumpFunction(center=1.0, radius=2.0)


def test_bump_derivative_matches_finite_difference():
    f = BumpFunction(center=2.0, radius=0.7)
    for x in (1.5, 1.9, 2.3, 2.6):
        h = 1e-6
        fd = (f(x + h) - f(x - h)) / (2.0 * h)
        assert f.derivative(x) == pytest.approx(fd, rel=1e-6, abs=1e-12)


# --- target CDF --------------------------------------------------------------------


def test_target_cdf_exponential(pi_exp):
    assert target_cdf(pi_exp, np.log(2.0)) == pytest.approx(0.5, abs=1e-9)
    assert target_cdf(pi_exp, 1e-12) == pytest.approx(0.0, abs=1e-12)


def test_target_cdf_non_smooth(pi_ns):
    # (2 (1 - e^{-2}) + 2) / 4
    expect = (2.0 * (1.0 - np.exp(-2.0)) + 2.0) / 4.0
    assert target_cdf(pi_ns, 4.0) == pytest.approx(expect, abs=1e-9)
    assert expect == pytest.approx(0.93233, abs=1e-5)


def test_target_cdf_monotone_and_normalized(pi_ns):
    xs = np.linspace(0.01, pi_ns.domain_cutoff, 257)
    F = target_cdf_many(pi_ns, xs)
    assert np.all(np.diff(F) >= -1e-12)
    assert target_cdf(pi_ns, pi_ns.domain_cutoff) == pytest.approx(1.0, abs=1e-8)


def test_target_quantile_inverts_cdf(pi_ns):
    for q in (0.1, 0.5, 0.9):
        x = target_quantile(pi_ns, q)
        assert target_cdf(pi_ns, x) == pytest.approx(q, abs=1e-6)


# --- sample-target metrics -----------------------------------------------------------


def test_ks_distance_exact_sampler(pi_exp):
    rng = np.random.default_rng(17)
    n = 10**5
    samples = EmpiricalDistribution.from_samples(-np.log1p(-rng.random(n)))
    assert ks_distance(samples, pi_exp) < 1.63 / np.sqrt(n)


def test_ks_distance_single_sample_at_median(pi_exp):
    emp = EmpiricalDistribution(np.array([np.log(2.0)]))
    assert ks_distance(emp, pi_exp) == pytest.approx(0.5, abs=1e-9)


def test_ks_distance_disjoint_support(pi_exp):
    emp = EmpiricalDistribution(np.linspace(500.0, 600.0, 100))
    assert ks_distance(emp, pi_exp) == pytest.approx(1.0, abs=1e-6)


def test_histogram_tv_identical_masses(pi_exp):
    # samples at the per-bin target quantiles give matching binned masses
    n = 400
    qs = (np.arange(n) + 0.5) / n
    samples = EmpiricalDistribution.from_samples(-np.log1p(-qs))
    assert histogram_tv(samples, pi_exp, 8) < 0.01


def test_histogram_tv_disjoint(pi_exp):
    emp = EmpiricalDistribution(np.linspace(500.0, 600.0, 50))
    assert histogram_tv(emp, pi_exp, 10) == pytest.approx(1.0, abs=1e-6)


def test_histogram_tv_exact_sampler_bound(pi_exp):
    rng = np.random.default_rng(23)
    n = 10**5
    samples = EmpiricalDistribution.from_samples(-np.log1p(-rng.random(n)))
    assert histogram_tv(samples, pi_exp, 100) < 0.02


def test_histogram_tv_needs_two_bins(pi_exp):
    emp = EmpiricalDistribution(np.array([1.0]))
    with pytest.raises(ValueError):
        histogram_tv(emp, pi_exp, 1)


def test_histogram_modes_quantization():
    rng = np.random.default_rng(3)
    vals = np.concatenate(
        [rng.normal(1.4, 0.3, 20000), rng.normal(8.6, 0.3, 20000)]
    )
    vals = vals[vals > 0]
    left, right = histogram_modes(vals, split=5.0)
    assert left == pytest.approx(1.4, abs=0.1)
    assert right == pytest.approx(8.6, abs=0.1)


# --- generator ------------------------------------------------------------------------


def test_generator_zero_outside_reach():
    f = BumpFunction(center=3.0, radius=0.5)
    mu = LevyMeasure(atoms=((1.0, 1.0),))
    phi = lambda x: -x
    # x and x + 1 both outside supp f
    assert generator_apply(phi, mu, f, 0.5) == 0.0
    assert generator_apply(phi, mu, f, 4.0) == 0.0


def test_generator_single_atom_shift():
    f = BumpFunction(center=3.0, radius=0.5)
    mu = LevyMeasure(atoms=((1.0, 1.0),))
    phi = lambda x: -x
    # x outside supp f but x + 1 inside: only the shifted term survives
    x = 2.2
    assert generator_apply(phi, mu, f, x) == pytest.approx(float(f(3.2)), rel=1e-14)


def test_generator_frozen_regression_value(mu_exp):
    # phi(x) = -x, mu = e^{-z} dz, f = bump(2, 1), x = 2 (the center, so
    # f'(2) = 0).  Reference: scipy quadrature of (f(2+z) - f(2)) e^{-z}
    # evaluated to 1e-10, frozen:
    f = BumpFunction(center=2.0, radius=1.0)
    frozen = -0.20538023562662955
    got = generator_apply(lambda x: -x, mu_exp, f, 2.0)
    assert got == pytest.approx(frozen, abs=1e-9)
    oracle = si.quad(lambda z: (f(2.0 + z) - f(2.0)) * np.exp(-z), 0.0, 50.0, limit=400)[0]
    assert got == pytest.approx(oracle, abs=1e-9)


# --- invariance residual ---------------------------------------------------------------


def test_residual_closed_form_pair(pi_exp, mu_exp):
    f = BumpFunction(center=3.0, radius=1.0)
    assert abs(invariance_residual(pi_exp, mu_exp, f)) < 1e-6


def test_residual_non_smooth(pi_ns, mu_ns):
    f = BumpFunction(center=3.0, radius=0.5)
    assert abs(invariance_residual(pi_ns, mu_ns, f)) < 1e-5


def test_residual_negative_control(pi_exp, mu_exp):
    f = BumpFunction(center=3.0, radius=1.0)
    base = abs(invariance_residual(pi_exp, mu_exp, f))
    doubled = abs(
        invariance_residual(
            pi_exp, mu_exp, f, phi=lambda x: 2.0 * drift_cp(pi_exp, mu_exp, x)
        )
    )
    assert doubled > 1e-3
    assert doubled > 100.0 * base


def test_residual_default_bump_suite(pi_exp, mu_exp):
    for f in default_bumps(pi_exp):
        assert abs(invariance_residual(pi_exp, mu_exp, f)) < 1e-5


def test_residual_linear_in_f(pi_exp, mu_exp):
    f = BumpFunction(center=2.0, radius=1.0)

    class Scaled:
        support = f.support

        def __call__(self, x):
            return 2.0 * f(x)

        def derivative(self, x):
            return 2.0 * f.derivative(x)

    a = invariance_residual(pi_exp, mu_exp, f)
    b = invariance_residual(pi_exp, mu_exp, Scaled())
    assert abs(b - 2.0 * a) < 1e-10


def test_default_bump_family_placement(pi_exp):
    bumps = default_bumps(pi_exp)
    assert len(bumps) == 5
    for f, q in zip(bumps, (0.1, 0.3, 0.5, 0.7, 0.9)):
        assert target_cdf(pi_exp, f.center) == pytest.approx(q, abs=1e-5)
        gap = min(f.center, pi_exp.domain_cutoff - f.center)
        assert f.radius == pytest.approx(0.5 * gap)
        assert f.center - f.radius > 0.0


# --- truncation report -------------------------------------------------------------------


def test_truncation_identity_rows(pi_exp):
    mu = LevyMeasure(atoms=((4.0, 1.0),))
    grid = np.linspace(0.5, 8.0, 16)
    report = truncation_report(pi_exp, mu, [8, 16], grid)
    for row in report.rows:
        assert row.sup_err == 0.0
        assert row.tail_mass == pytest.approx(0.0, abs=1e-12)
    assert report.bound_ok


def test_truncation_double_well_decreasing(pi_dw, mu_dw):
    grid = np.geomspace(0.1, 10.5, 48)
    report = truncation_report(pi_dw, mu_dw, [2, 4, 8, 16], grid)
    sups = [r.sup_err for r in report.rows]
    assert all(b < a for a, b in zip(sups, sups[1:]))
    assert report.bound_ok


def test_truncation_non_smooth_tail_mass_closed_form(pi_ns, mu_ns):
    # mass outside (1/2, 2): int_0^{1/2} + int_2^inf z^2 e^{-z/2} dz, atom
    # at 1 retained; closed forms via the incomplete-gamma antiderivative
    lower = 16.0 - np.exp(-0.25) * (2 * 0.25 + 8 * 0.5 + 16.0)
    upper = np.exp(-1.0) * (2 * 4.0 + 8 * 2.0 + 16.0)
    closed = lower + upper
    grid = np.linspace(0.2, 10.0, 16)
    report = truncation_report(pi_ns, mu_ns, [2], grid)
    assert report.rows[0].tail_mass == pytest.approx(closed, rel=1e-8)
    oracle = (
        si.quad(lambda z: z * z * np.exp(-0.5 * z), 0, 0.5)[0]
        + si.quad(lambda z: z * z * np.exp(-0.5 * z), 2.0, np.inf)[0]
    )
    assert report.rows[0].tail_mass == pytest.approx(oracle, rel=1e-8)


def test_lag_autocorrelation_report():
    from llmc.diagnostics import lag_autocorrelation

    rng = np.random.default_rng(0)
    # AR(1) with coefficient 0.6: autocorrelation 0.6^k
    n = 200000
    eps = rng.normal(size=n)
    v = np.empty(n)
    v[0] = eps[0]
    for i in range(1, n):
        v[i] = 0.6 * v[i - 1] + eps[i]
    report = lag_autocorrelation(v, lags=(1, 2, 5))
    assert [k for k, _ in report] == [1, 2, 5]
    for k, corr in report:
        assert corr == pytest.approx(0.6**k, abs=0.02)
    # lags beyond the sequence are dropped
    assert lag_autocorrelation([1.0, 2.0], lags=(5,)) == []
