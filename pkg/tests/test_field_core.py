import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlitho import DomainError, OpticalContext
from qlitho.field_core import (
    geometric_factor,
    geometric_factor_curve,
    geometric_factor_na,
    longitudinal_momentum,
    rotate_mode,
    schwarz_bound_density,
)


def test_wavelength_round_trip():
    ctx = OpticalContext.from_wavelength(0.37, c=2.5)
    assert ctx.wavelength == pytest.approx(0.37, rel=1e-15)
    assert ctx.kappa_max == pytest.approx(2 * math.pi / 0.37, rel=1e-15)


@pytest.mark.parametrize("kw", [{"omega": 0.0}, {"omega": -1.0}, {"omega": 1.0, "eta": 0.0}, {"omega": 1.0, "c": -1.0}])
def test_context_rejects_nonpositive(kw):
    with pytest.raises(DomainError):
        OpticalContext(**kw)


@pytest.mark.parametrize(
    "na, expected",
    [(0.0, 1.0), (0.8, 1 / math.sqrt(0.6)), (0.6, 1 / math.sqrt(0.8))],
)
def test_geometric_factor_values(ctx, na, expected):
    assert geometric_factor(na * ctx.kappa_max, ctx) == pytest.approx(expected, rel=1e-14)


def test_geometric_factor_at_080_is_about_1291(ctx):
    assert abs(geometric_factor(0.8 * ctx.kappa_max, ctx) - 1.2910) < 5e-4


@pytest.mark.parametrize("na", [1.0, -1.0, 1.5])
def test_geometric_factor_rejects_evanescent(ctx, na):
    with pytest.raises(DomainError):
        geometric_factor(na * ctx.kappa_max, ctx)


def test_geometric_factor_even_monotone_and_divergent():
    na, g = geometric_factor_curve(0.95, 191)
    assert na[0] == 0.0 and na[-1] == pytest.approx(0.95)
    assert g[0] == 1.0
    assert np.all(np.diff(g) > 0)
    assert np.array_equal(geometric_factor_na(-na), g)
    assert geometric_factor_na(1 - 1e-12) > 500


@pytest.mark.parametrize("kappa", [-3.0, 0.0, 1.7])
def test_identity_rotation(ctx, kappa):
    k_rot, scale = rotate_mode(kappa, 0.0, ctx)
    assert k_rot == pytest.approx(kappa, abs=1e-15)
    assert scale == 1.0


def test_rotation_example(ctx):
    k_rot, scale = rotate_mode(0.0, math.pi / 6, ctx)
    assert k_rot / ctx.kappa_max == pytest.approx(-0.5, rel=1e-14)
    assert scale == pytest.approx(0.93060, abs=5e-6)
    ratio = geometric_factor(0.0, ctx) / geometric_factor(k_rot, ctx)
    assert ratio == pytest.approx(scale, rel=1e-14)


def test_rotation_out_of_forward_half_space(ctx):
    with pytest.raises(DomainError):
        rotate_mode(0.0, math.pi / 2 + 0.1, ctx)


admissible = st.tuples(st.floats(-0.95, 0.95), st.floats(-1.2, 1.2))


@settings(max_examples=300, deadline=None)
@given(admissible)
def test_rotation_identity_and_dispersion(pair):
    ctx = OpticalContext.from_wavelength(1.0)
    na, theta = pair
    kappa = na * ctx.kappa_max
    kz = float(longitudinal_momentum(kappa, ctx))
    if kappa * math.sin(theta) + kz * math.cos(theta) <= 0:
        return
    k_rot, scale = rotate_mode(kappa, theta, ctx)
    if abs(k_rot) >= 0.999 * ctx.kappa_max:
        return
    kz_rot = kappa * math.sin(theta) + kz * math.cos(theta)
    assert (k_rot**2 + kz_rot**2) / ctx.kappa_max**2 == pytest.approx(1.0, rel=1e-12)
    assert abs(geometric_factor(kappa, ctx) / geometric_factor(k_rot, ctx) - scale) < 1e-12
    back, back_scale = rotate_mode(k_rot, -theta, ctx)
    assert back == pytest.approx(kappa, abs=1e-12 * ctx.kappa_max)
    assert scale * back_scale == pytest.approx(1.0, rel=1e-12)


def test_schwarz_bound_values():
    assert schwarz_bound_density(OpticalContext.from_wavelength(math.pi), 1) == pytest.approx(1.0, rel=1e-15)
    assert schwarz_bound_density(OpticalContext.from_wavelength(1.0), 2) == pytest.approx(2 * math.pi**2, rel=1e-15)
    with pytest.raises(ValueError):
        schwarz_bound_density(OpticalContext.from_wavelength(1.0), 0)
