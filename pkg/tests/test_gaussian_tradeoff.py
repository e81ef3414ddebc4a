import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlitho import ConstructionError, DomainError
from qlitho.absorption import absorption_rate_at
from qlitho.gaussian_tradeoff import (
    GaussianParams,
    StructuredMatrix,
    amplitude_form,
    analytic_pattern,
    classical_reference,
    limit_peak_rate_ratio,
    momentum_covariances,
    momentum_sampler,
    open_r_grid,
    peak_rate_ratio,
    position_covariances,
    relative_metric,
    rms_width,
    second_moment_width,
    total_rate_ratio,
    total_rate_ratio_at_zero,
    tradeoff_curves,
)
from qlitho.numerics import RandomPlan, mc_expectation
from qlitho.states import make_jointly_gaussian


def test_pattern_peak_value(ctx):
    assert analytic_pattern(GaussianParams(2, 0.5, 1.0), 0.0, ctx) == pytest.approx(0.900316, abs=5e-7)


def test_pattern_matches_reduced_integral(ctx):
    p = GaussianParams(2, 0.5, 1.0)
    x = np.linspace(-1, 1, 9)
    via_amp = absorption_rate_at(make_jointly_gaussian(p), x, ctx=ctx)
    assert np.allclose(via_amp, analytic_pattern(p, x, ctx), rtol=1e-8, atol=0)


def test_pattern_exponent(ctx):
    p = GaussianParams(3, 0.4, 0.9)
    x = np.linspace(-0.6, 0.6, 7)
    assert np.allclose(analytic_pattern(p, x, ctx) / analytic_pattern(p, 0.0, ctx), np.exp(-2 * 9 * 0.16 * x * x), rtol=1e-15)


def test_single_photon_pattern_width(ctx):
    p = GaussianParams(1, 0.8)
    assert rms_width(p).W == pytest.approx(1 / (4 * 0.8))
    assert second_moment_width(p, ctx) == pytest.approx(2 * rms_width(p).W, rel=1e-10)


def test_measured_width_is_twice_closed_form(ctx):
    # the second moment of exp(-2 N^2 B^2 x^2) is 1/(2NB), not the closed-form W
    p = GaussianParams(2, 0.5, 1.0)
    assert rms_width(p).W == pytest.approx(0.25, rel=1e-15)
    assert second_moment_width(p, ctx) == pytest.approx(0.5, rel=1e-8)


def test_limit_widths():
    w = rms_width(GaussianParams.from_reduction(2, 1.0, 1.0))
    assert w.W_classical == pytest.approx(1 / (4 * math.sqrt(2)), rel=1e-15)
    assert w.W_min / w.W_classical == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert rms_width(GaussianParams(2, 1.0)).W_classical is None


def test_momentum_covariance_values():
    c = momentum_covariances(GaussianParams(2, 1.0, 1.0))
    assert (c.var_rel, c.cov_rel) == (0.5, -0.5)
    assert momentum_covariances(GaussianParams(3, 0.2, 1.5)).var_kappa == pytest.approx(1.54, rel=1e-14)
    assert momentum_covariances(GaussianParams(4, 0.5, 1.0)).cov_kappa == 0.0


def test_position_covariance_values():
    assert position_covariances(GaussianParams(2, 0.5, 1.0)) == pytest.approx((0.375, 0.125), rel=1e-15)
    assert position_covariances(GaussianParams(2, 1.0, 1.0))[1] == pytest.approx(-0.0625, rel=1e-15)
    assert position_covariances(GaussianParams(3, 1 / math.sqrt(3), 1.0))[1] == pytest.approx(0.0, abs=1e-15)


def test_sampler_reproduces_relative_covariances():
    p = GaussianParams(3, 0.2, 1.5)
    draw = momentum_sampler(p)

    def obs(s):
        rel = s[:, 1:]
        return np.column_stack([s[:, 0] ** 2, rel[:, 0] ** 2, rel[:, 0] * rel[:, 1], (s[:, 0] + rel[:, 0]) ** 2])

    est = mc_expectation(draw, obs, RandomPlan(1, 400_000))
    c = momentum_covariances(p)
    expected = [c.var_K, c.var_rel, c.cov_rel, c.var_kappa]
    assert np.all(np.abs(est.mean - expected) <= 3 * est.std_error)


def test_sampled_relative_momenta_sum_to_zero():
    s = momentum_sampler(GaussianParams(5, 1.0, 1.0))(np.random.default_rng(0), 100)
    assert np.max(np.abs(s[:, 1:].sum(axis=1))) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 7, 40])
def test_structured_matrix_against_dense(n):
    m = StructuredMatrix(n, 2.3, -0.4 if n < 5 else 0.03)
    d = m.dense()
    assert m.det() == pytest.approx(np.linalg.det(d), rel=1e-10)
    assert np.allclose(m.inverse().dense(), np.linalg.inv(d), rtol=1e-12, atol=1e-14)
    L = m.cholesky()
    assert np.allclose(L @ L.T, d, rtol=1e-13, atol=1e-14)
    assert np.allclose(L, np.linalg.cholesky(d), rtol=1e-12, atol=1e-14)


def test_relative_metric_determinant():
    for n in range(2, 12):
        assert relative_metric(n).det() == pytest.approx(n, rel=1e-13)


def test_amplitude_form_inverse_is_position_covariance():
    p = GaussianParams(4, 0.7, 1.2)
    inv = amplitude_form(p).inverse()
    # psi(x, .., x) ~ exp(-x^2 * sum(M^-1)) and the rate squares it to exp(-2 N^2 B^2 x^2)
    assert inv.size * (inv.diag + (inv.size - 1) * inv.off) == pytest.approx(16 * 0.49, rel=1e-13)


def test_r_equals_one_is_classical():
    for n in (2, 3, 10):
        assert peak_rate_ratio(n, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert total_rate_ratio(n, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_peak_ratio_value():
    assert peak_rate_ratio(2, math.sqrt(2 / 3)) == pytest.approx(math.sqrt(8 / 9), rel=1e-14)


def test_peak_ratio_from_built_states(ctx):
    # the peak of the pattern with (B, beta) at r over that of the r = 1 state
    p = GaussianParams.from_reduction(2, math.sqrt(2 / 3), 1.0)
    ref = classical_reference(p)
    rate = absorption_rate_at(make_jointly_gaussian(p), 0.0, ctx=ctx)
    rate_ref = absorption_rate_at(make_jointly_gaussian(ref), 0.0, ctx=ctx)
    assert rate / rate_ref == pytest.approx(math.sqrt(8 / 9), rel=1e-8)


def test_peak_ratio_vanishes_at_sqrt_n():
    assert peak_rate_ratio(3, math.sqrt(3) * (1 - 1e-12)) < 1e-10


def test_zero_limit_at_hundred_photons():
    val = total_rate_ratio_at_zero(100)
    assert val == pytest.approx(1.644590, abs=1e-6)
    assert abs(val - math.exp(0.5)) / math.exp(0.5) < 3e-3


def test_open_grid_excludes_endpoints():
    r = open_r_grid(5, 200)
    assert r.size == 200 and r[0] > 0 and r[-1] < math.sqrt(5)


@pytest.mark.parametrize("r", [0.0, -0.1, math.sqrt(2), 2.0])
def test_r_outside_interval(r):
    with pytest.raises(DomainError):
        total_rate_ratio(2, r)


def test_curves_need_two_photons():
    with pytest.raises(DomainError):
        tradeoff_curves(1, [0.5])


@pytest.mark.parametrize("n", [2, 3, 5, 10])
def test_monotonicity_and_unique_maximum(n):
    t = tradeoff_curves(n, open_r_grid(n, 400))
    assert np.all(np.diff(t.R_tot) < 0)
    assert np.allclose(t.R, t.r * t.R_tot, rtol=1e-15)
    slope = np.diff(t.R)
    flips = np.nonzero(np.diff(np.sign(slope)))[0]
    assert flips.size == 1
    assert t.r[flips[0] + 1] == pytest.approx(1.0, abs=2 * (t.r[1] - t.r[0]))


def test_convergence_to_large_n_envelope():
    r = np.linspace(0.05, 3.0, 60)
    gaps = [np.abs(peak_rate_ratio(n, r) - limit_peak_rate_ratio(r)) for n in (10, 100, 1000)]
    away = np.abs(r - 1) > 1e-9
    assert np.all(gaps[1][away] < gaps[0][away]) and np.all(gaps[2][away] < gaps[1][away])


def test_classical_reference_values():
    ref = classical_reference(GaussianParams.from_reduction(2, 0.6, 1.0))
    assert ref.b_param == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert ref.beta_param == pytest.approx(1.0, rel=1e-15)
    assert ref.reduction_factor == pytest.approx(1.0, rel=1e-15)


def test_classical_reference_needs_budget():
    with pytest.raises(ConstructionError):
        classical_reference(GaussianParams(2, 1.0))


def test_budget_identity_enforced():
    with pytest.raises(ConstructionError, match="budget"):
        GaussianParams(2, 1.0, 1.0, kappa2_budget=2.0)


@pytest.mark.parametrize("kw", [{"b_param": 0.0}, {"beta_param": -1.0}, {"n_photons": 0}])
def test_parameter_validation(kw):
    args = {"n_photons": 2, "b_param": 1.0, "beta_param": 1.0} | kw
    with pytest.raises(ConstructionError):
        GaussianParams(**args)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 50), frac=st.floats(0.01, 0.99), k2=st.floats(0.1, 10.0))
def test_from_reduction_round_trip(n, frac, k2):
    r = frac * math.sqrt(n)
    p = GaussianParams.from_reduction(n, r, k2)
    assert p.reduction_factor == pytest.approx(r, rel=1e-12)
    assert momentum_covariances(p).var_kappa == pytest.approx(k2, rel=1e-12)
