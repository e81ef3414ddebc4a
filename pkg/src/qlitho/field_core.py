"""Optical context and the non-paraxial geometry of 2D monochromatic fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class OpticalContext:
    """Frequency scale and one-photon intensity scale.

    ``eta`` is taken as an input rather than derived from hbar, epsilon_0,
    L_y and T; every quantity compared downstream is a ratio or a bound in
    units of eta. ``ly_t_product`` is kept for reference only.
    """

    omega: float
    c: float = SPEED_OF_LIGHT
    eta: float = 1.0
    ly_t_product: float | None = None

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")

    @classmethod
    def from_wavelength(cls, wavelength: float = 1.0, eta: float = 1.0, c: float = 1.0, **kw):
        """Build from a free-space wavelength.

        The default ``c=1`` is the dimensionless convention in which every
        length is measured in the units of ``wavelength``.
        """
        if not wavelength > 0:
            raise DomainError(f"wavelength must be positive, got {wavelength}")
        return cls(omega=2.0 * math.pi * c / wavelength, c=c, eta=eta, **kw)

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi * self.c / self.omega

    @property
    def kappa_max(self) -> float:
        """Light-cone edge omega/c; transverse momenta must stay strictly inside."""
        return self.omega / self.c

    def numerical_aperture(self, kappa):
        return np.asarray(kappa) / self.kappa_max


def _check_inside(na):
    if np.any(np.abs(na) >= 1.0):
        raise DomainError("transverse momentum reaches or exceeds omega/c (evanescent mode)")


def geometric_factor(kappa, ctx: OpticalContext):
    """(1 - c^2 kappa^2 / omega^2)^(-1/4), evaluated directly (no expansion)."""
    na = np.asarray(kappa, dtype=float) / ctx.kappa_max
    _check_inside(na)
    out = (1.0 - na * na) ** -0.25
    return float(out) if out.ndim == 0 else out


def geometric_factor_na(na):
    """The same factor as a function of numerical aperture c*kappa/omega."""
    na = np.asarray(na, dtype=float)
    _check_inside(na)
    out = (1.0 - na * na) ** -0.25
    return float(out) if out.ndim == 0 else out


def longitudinal_momentum(kappa, ctx: OpticalContext):
    na = np.asarray(kappa, dtype=float) / ctx.kappa_max
    _check_inside(na)
    return ctx.kappa_max * np.sqrt(1.0 - na * na)


def rotate_mode(kappa: float, theta: float, ctx: OpticalContext) -> tuple[float, float]:
    """Transverse momentum and operator scale after rotating the z-x frame.

    Returns ``(kappa_rot, scale)`` with kappa_rot = kappa cos(theta) -
    k_z sin(theta) and scale = sqrt(k_z' / k_z), the factor relating the
    annihilation operators of the two frames. The rotated wave must keep
    k_z' > 0.
    """
    kz = float(longitudinal_momentum(kappa, ctx))
    kz_rot = kappa * math.sin(theta) + kz * math.cos(theta)
    if kz_rot <= 0:
        raise DomainError(f"rotation by {theta} leaves the forward half-space (k_z' = {kz_rot:g})")
    kappa_rot = kappa * math.cos(theta) - kz * math.sin(theta)
    return kappa_rot, math.sqrt(kz_rot / kz)


def schwarz_bound_density(ctx: OpticalContext, n_photons: int) -> float:
    """Ceiling N! (pi eta / lambda)^N on the N-photon absorption rate of any N-photon state."""
    if n_photons < 1:
        raise ValueError("n_photons must be at least 1")
    return math.factorial(n_photons) * (math.pi * ctx.eta / ctx.wavelength) ** n_photons


def geometric_factor_curve(na_max: float = 0.95, points: int = 191) -> tuple[np.ndarray, np.ndarray]:
    na = np.linspace(0.0, na_max, points)
    return na, geometric_factor_na(na)
