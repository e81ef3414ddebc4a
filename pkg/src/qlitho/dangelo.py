"""Biphoton double-slit model: near-field and momentum amplitudes, far-field coincidences.

Coordinates u = x1 + x2 and v = x1 - x2 separate the near-field amplitude
into a slit factor in u and a correlation factor in v. Momentum space uses
the conjugate pair (k1 + k2)/2 and (k1 - k2)/2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConstructionError, DomainError
from .field_core import OpticalContext
from .numerics import PANEL_ORDER, gauss_legendre_panels
from .propagate import PARAXIAL
from .states import MomentumAmplitude

CORR_SHAPES = ("gaussian", "rect")
# g(q) below this fraction of g(0) is dropped from the v integral
GAUSSIAN_CUTOFF = 12.0
ALPHA_WARN_RATIO = 0.1


def sinc(u):
    """sin(u)/u with sinc(0) = 1 (unnormalized)."""
    return np.sinc(np.asarray(u, dtype=float) / math.pi)


def correlation_g(shape: str, q):
    q = np.asarray(q, dtype=float)
    if shape == "gaussian":
        return math.pi**-0.25 * np.exp(-0.5 * q * q)
    if shape == "rect":
        return np.where(np.abs(q) < 0.5, 1.0, np.where(np.abs(q) == 0.5, 0.5, 0.0))
    raise ConstructionError(f"unknown correlation shape {shape!r}; choose from {CORR_SHAPES}")


def correlation_G(shape: str, p):
    """G(p) = (2 pi)^(-1/2) int g(q) exp(-i p q) dq, real for both even shapes."""
    p = np.asarray(p, dtype=float)
    if shape == "gaussian":
        return math.pi**-0.25 * np.exp(-0.5 * p * p)
    if shape == "rect":
        return sinc(p / 2) / math.sqrt(2 * math.pi)
    raise ConstructionError(f"unknown correlation shape {shape!r}; choose from {CORR_SHAPES}")


def rect(t):
    t = np.abs(np.asarray(t, dtype=float))
    return np.where(t < 0.5, 1.0, np.where(t == 0.5, 0.5, 0.0))


@dataclass(frozen=True)
class SlitExperiment:
    """Photon pair with correlation length ``coherence_length`` sent through two slits.

    Slits of width ``slit_width`` sit at x = +-slit_spacing/2. ``epsilon``
    is the pair amplitude of |0> + epsilon |2>.
    """

    slit_width: float
    slit_spacing: float
    coherence_length: float
    epsilon: complex = 0.1
    corr_shape: str = "gaussian"
    ctx: OpticalContext = field(default_factory=OpticalContext.from_wavelength)

    def __post_init__(self):
        problems = []
        for name in ("slit_width", "slit_spacing", "coherence_length"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")
        if self.slit_spacing <= self.slit_width:
            problems.append("slit_spacing must exceed slit_width so the slits do not overlap")
        if abs(self.epsilon) > 1:
            problems.append(f"|epsilon| must not exceed 1, got {abs(self.epsilon)}")
        if self.corr_shape not in CORR_SHAPES:
            problems.append(f"corr_shape must be one of {CORR_SHAPES}, got {self.corr_shape!r}")
        if problems:
            raise ConstructionError("; ".join(problems))
        if self.coherence_length > ALPHA_WARN_RATIO * self.slit_width:
            warnings.warn(
                f"coherence length {self.coherence_length:g} exceeds a/10; "
                "pairs are no longer confined to a single slit",
                stacklevel=3,
            )

    def with_alpha(self, alpha: float) -> "SlitExperiment":
        return SlitExperiment(self.slit_width, self.slit_spacing, alpha, self.epsilon, self.corr_shape, self.ctx)

    def g(self, q):
        return correlation_g(self.corr_shape, q)

    def G(self, p):
        return correlation_G(self.corr_shape, p)

    def angle_to_kappa(self, theta):
        return 2 * math.pi * np.asarray(theta, dtype=float) / self.ctx.wavelength


def near_field_psi(exp: SlitExperiment, x1, x2):
    """Normalized pair amplitude just behind the slits."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    a, b, alpha = exp.slit_width, exp.slit_spacing, exp.coherence_length
    u, v = x1 + x2, x1 - x2
    slits = rect((u - b) / (2 * a)) + rect((u + b) / (2 * a))
    out = exp.g(v / alpha) * slits / math.sqrt(2 * alpha * a) + 0j
    return complex(out) if out.ndim == 0 else out


def momentum_phi(exp: SlitExperiment, k1, k2):
    """Closed-form Fourier transform of :func:`near_field_psi`."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    a, b, alpha = exp.slit_width, exp.slit_spacing, exp.coherence_length
    s, d = (k1 + k2) / 2, (k1 - k2) / 2
    out = math.sqrt(alpha * a / math.pi) * exp.G(alpha * d) * sinc(a * s) * np.cos(b * s) + 0j
    return complex(out) if out.ndim == 0 else out


def _panel_breaks(lo, hi, max_freq, radians_per_panel=2.0):
    count = max(1, int(math.ceil((hi - lo) * max_freq / radians_per_panel)))
    return np.linspace(lo, hi, count + 1)


def _uv_rules(exp: SlitExperiment, max_s: float, max_d: float):
    a, b, alpha = exp.slit_width, exp.slit_spacing, exp.coherence_length
    # integrand is smooth on each slit in u, so panels end exactly on the slit edges
    u_parts = [_panel_breaks(c - a, c + a, max_s) for c in (-b, b)]
    un, uw = [], []
    for br in u_parts:
        n, w = gauss_legendre_panels(br, PANEL_ORDER * (len(br) - 1))
        un.append(n)
        uw.append(w)
    u_nodes, u_w = np.concatenate(un), np.concatenate(uw)
    half_v = alpha * (GAUSSIAN_CUTOFF if exp.corr_shape == "gaussian" else 0.5)
    v_br = _panel_breaks(-half_v, half_v, max(max_d, 1.0 / alpha))
    v_nodes, v_w = gauss_legendre_panels(v_br, PANEL_ORDER * (len(v_br) - 1))
    return (u_nodes, u_w), (v_nodes, v_w)


def numerical_momentum_phi(exp: SlitExperiment, k1, k2):
    """phi(k1, k2) from a 2D Gauss-Legendre transform of the sampled near field.

    The (u, v) tensor rule has panel edges on the slit boundaries, so the
    only error is the quadrature error of a smooth integrand; no knowledge
    of the closed form is used.
    """
    k1 = np.atleast_1d(np.asarray(k1, dtype=float))
    k2 = np.atleast_1d(np.asarray(k2, dtype=float))
    k1, k2 = np.broadcast_arrays(k1, k2)
    s, d = (k1 + k2) / 2, (k1 - k2) / 2
    (u, wu), (v, wv) = _uv_rules(exp, float(np.max(np.abs(s))), float(np.max(np.abs(d))))
    uu, vv = np.meshgrid(u, v, indexing="ij")
    psi_uv = near_field_psi(exp, (uu + vv) / 2, (uu - vv) / 2) * np.outer(wu, wv)
    # k1 x1 + k2 x2 = s u + d v ; dx1 dx2 = du dv / 2
    eu = np.exp(-1j * np.outer(s.ravel(), u))
    ev = np.exp(-1j * np.outer(d.ravel(), v))
    out = np.einsum("pu,uv,pv->p", eu, psi_uv, ev) / (4 * math.pi)
    return out.reshape(k1.shape)


def angular_coincidence(exp: SlitExperiment, theta):
    """Far-field pair coincidence rate |epsilon|^2 |phi(k, k)|^2 at k = 2 pi theta / lambda."""
    kappa = exp.angle_to_kappa(theta)
    out = abs(exp.epsilon) ** 2 * np.abs(momentum_phi(exp, kappa, kappa)) ** 2
    return float(out) if np.ndim(out) == 0 else out


def pipeline_angular_coincidence(exp: SlitExperiment, theta):
    """The same rate computed through the numerical transform of the near field."""
    kappa = exp.angle_to_kappa(theta)
    out = abs(exp.epsilon) ** 2 * np.abs(numerical_momentum_phi(exp, kappa, kappa)) ** 2
    return out.reshape(np.shape(theta)) if np.ndim(theta) else float(out[0])


class AngularScan(NamedTuple):
    theta: np.ndarray
    rate: np.ndarray


def angular_scan(exp: SlitExperiment, theta_max: float, points: int = 401, method: str = "closed_form") -> AngularScan:
    theta = np.linspace(-theta_max, theta_max, points)
    if method == "closed_form":
        return AngularScan(theta, angular_coincidence(exp, theta))
    if method == "pipeline":
        return AngularScan(theta, pipeline_angular_coincidence(exp, theta))
    raise ValueError(f"unknown method {method!r}")


def cos_null_angles(exp: SlitExperiment, count: int = 1) -> np.ndarray:
    """Angles (2m + 1) lambda / (4b) where the two-slit factor vanishes."""
    m = np.arange(count)
    return (2 * m + 1) * exp.ctx.wavelength / (4 * exp.slit_spacing)


class AlphaScan(NamedTuple):
    alphas: np.ndarray
    rates: np.ndarray
    slope: float
    relative_residual: float
    r_squared: float


def fit_through_origin(x, y) -> tuple[float, float, float]:
    """Least-squares slope of y = k x, relative residual |res|/|y| and R^2 about the mean."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope = float(x @ y / (x @ x))
    res = y - slope * x
    rel = float(np.linalg.norm(res) / np.linalg.norm(y))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(res @ res) / ss_tot if ss_tot > 0 else 1.0
    return slope, rel, r2


def alpha_scan(exp: SlitExperiment, alphas, theta: float = 0.0, method: str = "closed_form") -> AlphaScan:
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0):
        raise DomainError("every coherence length must be positive")
    rate_fn = {"closed_form": angular_coincidence, "pipeline": pipeline_angular_coincidence}.get(method)
    if rate_fn is None:
        raise ValueError(f"unknown method {method!r}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rates = np.array([rate_fn(exp.with_alpha(a), theta) for a in alphas])
    slope, rel, r2 = fit_through_origin(alphas, rates)
    return AlphaScan(alphas, rates, slope, rel, r2)


@dataclass(frozen=True)
class BiphotonSlitAmplitude(MomentumAmplitude):
    """Two-photon component of the slit experiment as a momentum amplitude.

    Its sinc tails decay too slowly for tensor quadrature, so position-space
    evaluation goes through the exact near field.
    """

    experiment: SlitExperiment
    n_photons: int = field(default=2, init=False)
    variant: str = field(default="biphoton_slits", init=False)

    def __call__(self, kappas):
        k = np.asarray(kappas, dtype=float)
        return np.asarray(momentum_phi(self.experiment, k[..., 0], k[..., 1]))

    def kappa_breaks(self):
        e = self.experiment
        reach = 40 * math.pi / e.slit_width
        return np.array([-reach, reach])

    def structured_psi(self, pts, regime, ctx):
        if regime != PARAXIAL:
            return None
        return np.asarray(near_field_psi(self.experiment, pts[..., 0], pts[..., 1]))

    def structured_diagonal(self, x, regime, ctx):
        if regime != PARAXIAL:
            raise DomainError("the slit model is paraxial only")
        return np.asarray(near_field_psi(self.experiment, x, x))
