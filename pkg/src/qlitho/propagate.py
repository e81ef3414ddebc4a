"""Spatial multiphoton amplitudes psi(x_1, ..., x_N) at the observation plane.

Two routes are provided and kept independent of each other:

* ``tensor``: brute-force N-dimensional quadrature of
  (2 pi)^(-N/2) int prod_n gamma(kappa_n) phi(kappa) exp(i sum kappa_n x_n),
  limited to N <= 3;
* ``structured``: closed reductions exploiting the state's structure (the
  two-term NOON product, the separable classical product, the Gaussian
  characteristic function, the one-dimensional total-momentum integral).

``regime`` is ``"paraxial"`` (gamma = 1, unrestricted support) or
``"nonparaxial"`` (gamma weights, support inside the light cone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DomainError
from .field_core import OpticalContext, geometric_factor
from .gaussian_tradeoff import amplitude_form, relative_metric
from .numerics import (
    DEFAULT_QUAD,
    MAX_TENSOR_DIM,
    QuadratureSpec,
    gauss_legendre_panels,
    grid_fourier,
    integrate_1d,
)
from .states import (
    ClassicalAmplitude,
    CustomGridAmplitude,
    JointlyGaussianAmplitude,
    ModeSpectrum,
    MomentumAmplitude,
    NoonAmplitude,
)

PARAXIAL = "paraxial"
NONPARAXIAL = "nonparaxial"
REGIMES = (PARAXIAL, NONPARAXIAL)


def _check_regime(regime, ctx):
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if regime == NONPARAXIAL and ctx is None:
        raise ValueError("the nonparaxial regime needs an OpticalContext")


@dataclass(frozen=True)
class SpatialAmplitudeRequest:
    amp: MomentumAmplitude
    points: tuple[float, ...]
    regime: str = PARAXIAL
    ctx: OpticalContext | None = None
    quad: QuadratureSpec = DEFAULT_QUAD
    method: str = "auto"


# --- beam envelope -----------------------------------------------------------


def _analytic_envelope(mode: ModeSpectrum, x):
    dk = mode.delta_kappa
    if mode.shape_tag == "gaussian":
        return np.pi**-0.25 * math.sqrt(dk) * np.exp(-0.5 * (dk * x) ** 2) + 0j
    if mode.shape_tag == "rect":
        return math.sqrt(dk / (2 * math.pi)) * np.sinc(dk * x / (2 * math.pi)) + 0j
    return None


def envelope_support(mode: ModeSpectrum, regime: str, ctx: OpticalContext | None) -> np.ndarray:
    """Break points in kappa of the integrand f(kappa/dk), checked against the light cone."""
    breaks = mode.q_breaks() * mode.delta_kappa
    if regime == NONPARAXIAL:
        reach = np.max(np.abs(breaks - mode.kappa0))
        if reach >= ctx.kappa_max:
            raise DomainError(
                f"mode support reaches |kappa - kappa0| = {reach:g} >= omega/c = {ctx.kappa_max:g}"
            )
    return breaks


def beam_envelope(
    mode: ModeSpectrum,
    x,
    regime: str = PARAXIAL,
    ctx: OpticalContext | None = None,
    method: str = "auto",
    quad: QuadratureSpec = DEFAULT_QUAD,
):
    """F(x) = (2 pi dk)^(-1/2) int gamma(kappa - kappa0) f(kappa/dk) exp(i kappa x) dkappa.

    ``method`` is ``"analytic"`` (paraxial Gaussian or rect f only),
    ``"quadrature"`` (adaptive, per point), or ``"auto"`` (analytic when
    available).
    """
    _check_regime(regime, ctx)
    x_arr = np.asarray(x, dtype=float)
    if method in ("auto", "analytic") and regime == PARAXIAL:
        out = _analytic_envelope(mode, x_arr)
        if out is not None:
            return complex(out) if out.ndim == 0 else out
        if method == "analytic":
            raise CapabilityError(f"no closed-form envelope for shape {mode.shape_tag!r}")
    elif method == "analytic":
        raise CapabilityError("closed-form envelopes exist only in the paraxial regime")

    breaks = envelope_support(mode, regime, ctx)
    dk = mode.delta_kappa
    scale = 1.0 / math.sqrt(2 * math.pi * dk)

    if regime == NONPARAXIAL:
        def weight(k):
            return geometric_factor(k - mode.kappa0, ctx) * complex(mode.f(k / dk))
    else:
        def weight(k):
            return complex(mode.f(k / dk))

    flat = x_arr.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for i, xi in enumerate(flat):
        total = 0j
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            total += integrate_1d(lambda k: weight(k) * np.exp(1j * k * xi), (lo, hi), quad).value
        out[i] = scale * total
    out = out.reshape(x_arr.shape)
    return complex(out) if out.ndim == 0 else out


def _envelope_pair(mode, x, regime, ctx, quad):
    """F(x) and F(-x) with a single evaluation over the union of points."""
    x = np.asarray(x, dtype=float)
    both = np.concatenate([x.ravel(), -x.ravel()])
    uniq, inv = np.unique(both, return_inverse=True)
    vals = np.atleast_1d(beam_envelope(mode, uniq, regime, ctx, quad=quad))[inv]
    n = x.size
    return vals[:n].reshape(x.shape), vals[n:].reshape(x.shape)


# --- tensor quadrature route -------------------------------------------------


def _axis_rule(amp, regime, ctx, quad):
    breaks = np.asarray(amp.kappa_breaks(), dtype=float)
    if regime == PARAXIAL:
        nodes, weights = gauss_legendre_panels(breaks, quad.grid_points_per_dim)
        return nodes, weights + 0j
    # sine map on the light cone: kappa = kmax sin(t); removes the edge singularity of gamma
    kmax = ctx.kappa_max
    clipped = np.clip(breaks, -kmax, kmax)
    t_breaks = np.arcsin(clipped / kmax)
    t, wt = gauss_legendre_panels(t_breaks, quad.grid_points_per_dim)
    nodes = kmax * np.sin(t)
    weights = wt * kmax * np.cos(t) * geometric_factor(nodes, ctx)
    return nodes, weights + 0j


def tensor_psi(amp: MomentumAmplitude, points, regime=PARAXIAL, ctx=None, quad=DEFAULT_QUAD):
    """psi at ``points`` (shape (..., N)) by tensor quadrature of phi."""
    _check_regime(regime, ctx)
    n = amp.n_photons
    if n > MAX_TENSOR_DIM:
        raise CapabilityError(
            f"tensor quadrature is limited to N <= {MAX_TENSOR_DIM}; "
            "use diagonal_amplitude or a structured path for larger N"
        )
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1:] != (n,):
        raise ValueError(f"expected points with trailing dimension {n}, got {pts.shape}")
    flat = pts.reshape(-1, n)
    nodes, weights = _axis_rule(amp, regime, ctx, quad)
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    phi = amp(np.stack(grids, axis=-1))
    # contract one axis at a time: cost n^N per point, no n^N x P intermediates
    kern = [weights[:, None] * np.exp(1j * np.outer(nodes, flat[:, d])) for d in range(n)]
    t = np.tensordot(phi, kern[0], axes=([0], [0]))
    for d in range(1, n):
        t = np.einsum("j...p,jp->...p", t, kern[d])
    out = t * (2 * math.pi) ** (-n / 2)
    return out.reshape(pts.shape[:-1])


# --- structured route --------------------------------------------------------


def _structured_psi(amp, pts, regime, ctx, quad):
    if isinstance(amp, NoonAmplitude):
        f_pos, f_neg = _envelope_pair(amp.mode, pts, regime, ctx, quad)
        k0 = amp.mode.kappa0
        tot = pts.sum(axis=-1)
        return (
            np.exp(-1j * k0 * tot) * np.prod(f_pos, axis=-1)
            + np.exp(1j * k0 * tot) * np.prod(f_neg, axis=-1)
        ) / math.sqrt(2)
    if isinstance(amp, ClassicalAmplitude):
        f_pos, f_neg = _envelope_pair(amp.mode, pts, regime, ctx, quad)
        k0 = amp.mode.kappa0
        one = (f_pos * np.exp(-1j * k0 * pts) + f_neg * np.exp(1j * k0 * pts)) / math.sqrt(2)
        return np.prod(one, axis=-1)
    if isinstance(amp, JointlyGaussianAmplitude) and regime == PARAXIAL:
        # Fourier transform of exp(-k^T M k / 4) is (4 pi)^(N/2) det(M)^(-1/2) exp(-x^T M^-1 x)
        m = amplitude_form(amp.params)
        minv = m.inverse()
        n = amp.n_photons
        quad_form = (minv.diag - minv.off) * np.sum(pts * pts, axis=-1) + minv.off * np.sum(pts, axis=-1) ** 2
        pref = math.sqrt(amp.norm_constant / n) * (2 * math.pi) ** (-n / 2) * (4 * math.pi) ** (n / 2) / math.sqrt(m.det())
        return pref * np.exp(-quad_form) + 0j
    hook = getattr(amp, "structured_psi", None)
    if hook is not None:
        return hook(pts, regime, ctx)
    return None


def psi(amp: MomentumAmplitude, points, regime=PARAXIAL, ctx=None, quad=DEFAULT_QUAD, method="auto"):
    """Vectorized spatial amplitude; ``points`` has shape (..., N)."""
    _check_regime(regime, ctx)
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1:] != (amp.n_photons,):
        raise ValueError(f"expected {amp.n_photons} positions per point, got shape {pts.shape}")
    if method not in ("auto", "tensor", "structured"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "structured"):
        out = _structured_psi(amp, pts, regime, ctx, quad)
        if out is not None:
            return out
        if method == "structured":
            raise CapabilityError(f"no structured path for {amp.variant} in the {regime} regime")
    if isinstance(amp, CustomGridAmplitude) and regime == PARAXIAL and method == "auto":
        return grid_psi(amp, pts)
    return tensor_psi(amp, pts, regime, ctx, quad)


def spatial_amplitude(req: SpatialAmplitudeRequest) -> complex:
    return complex(psi(req.amp, np.asarray(req.points, dtype=float), req.regime, req.ctx, req.quad, req.method))


def grid_psi(amp: CustomGridAmplitude, points):
    """Paraxial psi of a grid amplitude by the continuous grid Fourier transform."""
    pts = np.asarray(points, dtype=float).reshape(-1, amp.n_photons)
    out = np.empty(len(pts), dtype=complex)
    for i, p in enumerate(pts):
        t = amp.values
        for d in range(amp.n_photons):
            t = grid_fourier(t, amp.lower, amp.spacing, [p[d]], axis=0)[0]
        out[i] = t
    return out.reshape(np.shape(points)[:-1])


# --- diagonal psi(x, ..., x) -------------------------------------------------


def _gaussian_diagonal(amp: JointlyGaussianAmplitude, x, quad):
    """Total-momentum reduction: only a 1D integral over K remains."""
    p = amp.params
    n = p.n_photons
    rel_integral = 1.0
    if n > 1:
        rel_integral = (4 * math.pi * p.beta_param**2) ** ((n - 1) / 2) / math.sqrt(relative_metric(n).det())
    pref = (2 * math.pi) ** (-n / 2) * math.sqrt(n) * math.sqrt(amp.norm_constant) * rel_integral
    cut = 16.0 * p.b_param
    flat = np.asarray(x, dtype=float).ravel()
    out = np.empty(flat.shape, dtype=complex)
    for i, xi in enumerate(flat):
        val = integrate_1d(
            lambda k: math.exp(-k * k / (4 * p.b_param**2)) * np.exp(1j * n * k * xi), (-cut, cut), quad
        ).value
        out[i] = pref * val
    return out.reshape(np.shape(x))


def diagonal_amplitude(
    amp: MomentumAmplitude,
    x,
    regime: str = PARAXIAL,
    ctx: OpticalContext | None = None,
    quad: QuadratureSpec = DEFAULT_QUAD,
    method: str = "auto",
):
    """psi(x, ..., x) for an array of positions ``x``."""
    _check_regime(regime, ctx)
    x_arr = np.asarray(x, dtype=float)
    n = amp.n_photons
    if method == "tensor":
        out = tensor_psi(amp, np.repeat(x_arr[..., None], n, axis=-1), regime, ctx, quad)
    elif isinstance(amp, NoonAmplitude):
        f_pos, f_neg = _envelope_pair(amp.mode, x_arr, regime, ctx, quad)
        k0 = amp.mode.kappa0
        out = (f_pos**n * np.exp(-1j * n * k0 * x_arr) + f_neg**n * np.exp(1j * n * k0 * x_arr)) / math.sqrt(2)
    elif isinstance(amp, ClassicalAmplitude):
        f_pos, f_neg = _envelope_pair(amp.mode, x_arr, regime, ctx, quad)
        k0 = amp.mode.kappa0
        out = ((f_pos * np.exp(-1j * k0 * x_arr) + f_neg * np.exp(1j * k0 * x_arr)) / math.sqrt(2)) ** n
    elif isinstance(amp, JointlyGaussianAmplitude) and regime == PARAXIAL:
        out = _gaussian_diagonal(amp, x_arr, quad)
    elif hasattr(amp, "structured_diagonal"):
        out = amp.structured_diagonal(x_arr, regime, ctx)
    elif n <= MAX_TENSOR_DIM:
        out = psi(amp, np.repeat(x_arr[..., None], n, axis=-1), regime, ctx, quad)
    else:
        raise CapabilityError(f"no diagonal path for {amp.variant} with N={n} in the {regime} regime")
    out = np.asarray(out)
    return complex(out) if out.ndim == 0 else out
