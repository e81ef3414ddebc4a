import math

import numpy as np
import pytest

from qlitho import CapabilityError, DomainError
from qlitho.gaussian_tradeoff import GaussianParams
from qlitho.numerics import integrate_nd
from qlitho.propagate import (
    NONPARAXIAL,
    PARAXIAL,
    SpatialAmplitudeRequest,
    beam_envelope,
    diagonal_amplitude,
    psi,
    spatial_amplitude,
    tensor_psi,
)
from qlitho.states import ModeSpectrum, make_classical, make_jointly_gaussian, make_noon

X101 = np.linspace(-30, 30, 101)


def test_paraxial_envelope_real_even():
    mode = ModeSpectrum.gaussian(1.0, 0.1)
    f = beam_envelope(mode, X101, method="quadrature")
    assert np.max(np.abs(f.imag)) < 1e-12
    assert np.max(np.abs(f - f[::-1])) < 1e-12


def test_envelope_quadrature_matches_closed_form():
    mode = ModeSpectrum.gaussian(1.0, 0.1)
    assert np.allclose(beam_envelope(mode, X101, method="quadrature"), beam_envelope(mode, X101, method="analytic"), atol=1e-12)


def test_rect_envelope_closed_form():
    mode = ModeSpectrum.rect(1.0, 0.2)
    x = np.linspace(-40, 40, 33)
    assert np.allclose(beam_envelope(mode, x, method="quadrature"), beam_envelope(mode, x, method="analytic"), atol=1e-11)


def _fitted_width(x, f):
    # log|F| = c - x^2 / (2 w^2): least squares on the quadratic coefficient
    coef = np.polyfit(x * x, np.log(np.abs(f)), 1)[0]
    return math.sqrt(-1 / (2 * coef))


def test_doubling_bandwidth_halves_width():
    x = np.linspace(-15, 15, 61)
    w1 = _fitted_width(x, beam_envelope(ModeSpectrum.gaussian(1.0, 0.1), x, method="quadrature"))
    w2 = _fitted_width(x, beam_envelope(ModeSpectrum.gaussian(1.0, 0.2), x, method="quadrature"))
    assert w1 / w2 == pytest.approx(2.0, rel=1e-6)


def test_nonparaxial_envelope_asymmetry_reported(ctx):
    mode = ModeSpectrum.gaussian(0.5 * ctx.kappa_max, 0.05 * ctx.kappa_max)
    x = np.linspace(-10, 10, 41)
    f = beam_envelope(mode, x, NONPARAXIAL, ctx)
    asym = float(np.max(np.abs(f - f[::-1])))
    print(f"nonparaxial max |F(x) - F(-x)| = {asym:.3e}")
    assert asym > 0


def test_nonparaxial_support_outside_light_cone(ctx):
    with pytest.raises(DomainError, match="omega/c"):
        beam_envelope(ModeSpectrum.gaussian(1.0, 1.0), 0.0, NONPARAXIAL, ctx)


def test_nonparaxial_needs_context():
    with pytest.raises((DomainError, ValueError)):
        beam_envelope(ModeSpectrum.gaussian(1.0, 0.1), 0.0, NONPARAXIAL, None)


def test_classical_psi_factorizes():
    amp = make_classical(ModeSpectrum.gaussian(1.0, 0.2), 2)
    rng = np.random.default_rng(3)
    x = rng.uniform(-4, 4, size=(30, 4))
    ab = tensor_psi(amp, x[:, [0, 1]]) * tensor_psi(amp, x[:, [2, 3]])
    cd = tensor_psi(amp, x[:, [0, 3]]) * tensor_psi(amp, x[:, [2, 1]])
    keep = np.abs(ab) > 1e-6 * np.max(np.abs(ab))
    assert np.max(np.abs(ab - cd)[keep] / np.abs(ab[keep])) < 1e-10


def test_structured_and_tensor_routes_agree():
    amp = make_classical(ModeSpectrum.gaussian(1.0, 0.2), 2)
    x = np.random.default_rng(1).uniform(-3, 3, size=(10, 2))
    assert np.allclose(psi(amp, x, method="structured"), psi(amp, x, method="tensor"), rtol=1e-9, atol=1e-12)


def test_noon_diagonal_matches_tensor_oracle():
    amp = make_noon(ModeSpectrum.gaussian(1.0, 0.1), 2)
    x = np.linspace(-5, 5, 21)
    fast = diagonal_amplitude(amp, x)
    slow = diagonal_amplitude(amp, x, method="tensor")
    keep = np.abs(slow) > 1e-8 * np.max(np.abs(slow))
    assert np.max(np.abs(fast - slow)[keep] / np.abs(slow[keep])) < 1e-6


def test_noon_diagonal_is_cos_fringe():
    mode = ModeSpectrum.gaussian(1.0, 0.1)
    x = np.linspace(-4, 4, 81)
    f = beam_envelope(mode, x).real
    expected = math.sqrt(2) * f**3 * np.cos(3 * x)
    assert np.allclose(diagonal_amplitude(make_noon(mode, 3), x), expected, rtol=0, atol=1e-14)


def test_noon_three_photon_zero_spacing():
    mode = ModeSpectrum.gaussian(1.0, 0.1)
    amp = make_noon(mode, 3)
    zeros = (np.arange(-3, 3) + 0.5) * math.pi / 3
    assert np.max(np.abs(diagonal_amplitude(amp, zeros))) < 1e-14
    assert np.allclose(np.diff(zeros), math.pi / 3)


def test_classical_diagonal_fringe_period():
    mode = ModeSpectrum.gaussian(1.0, 0.1)
    amp = make_classical(mode, 2)
    x = np.linspace(-0.5, 0.5, 11)

    def fringe(pos):
        return np.abs(diagonal_amplitude(amp, pos)) ** 2 / beam_envelope(mode, pos).real ** 4

    assert np.allclose(fringe(x), fringe(x + math.pi), rtol=1e-12)
    assert np.allclose(fringe(x), 4 * np.cos(x) ** 4, rtol=1e-12)
    assert abs(diagonal_amplitude(amp, math.pi / 2)) < 1e-14


def test_paraxial_classical_psi_normalized():
    amp = make_classical(ModeSpectrum.gaussian(5.0, 0.5), 2)
    breaks = np.linspace(-16, 16, 65)
    res = integrate_nd(lambda p: np.abs(psi(amp, p)) ** 2, [breaks, breaks])
    assert res.value == pytest.approx(1.0, abs=1e-4)


def test_tensor_limited_to_three_photons():
    with pytest.raises(CapabilityError, match="diagonal_amplitude"):
        tensor_psi(make_noon(ModeSpectrum.gaussian(1.0, 0.1), 4), np.zeros(4))


def test_diagonal_fast_path_handles_many_photons():
    amp = make_noon(ModeSpectrum.gaussian(1.0, 0.1), 8)
    val = diagonal_amplitude(amp, 0.0)
    assert val.real == pytest.approx(math.sqrt(2) * beam_envelope(amp.mode, 0.0).real ** 8, rel=1e-14)


def test_gaussian_diagonal_exponent():
    amp = make_jointly_gaussian(GaussianParams(2, 0.5, 1.0))
    x = np.linspace(-1.5, 1.5, 13)
    reduced = np.abs(diagonal_amplitude(amp, x)) ** 2
    full = np.abs(diagonal_amplitude(amp, x, method="tensor")) ** 2
    assert np.allclose(reduced, full, rtol=1e-8, atol=0)
    assert np.allclose(reduced / reduced[6], np.exp(-2 * x * x), rtol=1e-12)


def test_gaussian_structured_psi_matches_tensor():
    amp = make_jointly_gaussian(GaussianParams(3, 0.3, 1.2))
    x = np.random.default_rng(2).uniform(-1, 1, size=(6, 3))
    assert np.allclose(psi(amp, x), tensor_psi(amp, x), rtol=1e-9, atol=1e-13)


def test_request_object():
    amp = make_noon(ModeSpectrum.gaussian(1.0, 0.1), 2)
    req = SpatialAmplitudeRequest(amp, (0.3, 0.3))
    assert spatial_amplitude(req) == pytest.approx(complex(diagonal_amplitude(amp, 0.3)), abs=1e-15)


def test_point_shape_checked():
    with pytest.raises(ValueError, match="positions"):
        psi(make_noon(ModeSpectrum.gaussian(1.0, 0.1), 2), np.zeros((4, 3)))


def test_unknown_regime():
    with pytest.raises(ValueError):
        psi(make_noon(ModeSpectrum.gaussian(1.0, 0.1), 2), np.zeros(2), regime="bogus")


def test_paraxial_constant_string():
    assert PARAXIAL == "paraxial"
