"""Momentum-space N-photon amplitudes and their defining checks.

Every amplitude is a callable taking momenta of shape (..., N) and
returning complex values of shape (...). Variants:

* NOON and classical states built from two tilted modes of one spectrum,
* the jointly Gaussian state,
* amplitudes sampled on a uniform tensor grid (``custom_grid``).

The biphoton-through-slits amplitude lives in :mod:`qlitho.dangelo`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConstructionError
from .gaussian_tradeoff import GaussianParams, normalization_constant
from .numerics import (
    DEFAULT_QUAD,
    MAX_TENSOR_DIM,
    QuadratureSpec,
    RandomPlan,
    integrate_1d,
    integrate_nd,
    mc_expectation,
    rng_from_seed,
    trapezoid_weights,
)

OVERLAP_TOL = 1e-8
OVERLAP_MAX = 1e-4
GAUSSIAN_EXTENT = 9.0  # |f(q)|^2 < 1e-35 beyond this many bandwidths


def gaussian_shape(q):
    q = np.asarray(q, dtype=float)
    return np.pi**-0.25 * np.exp(-0.5 * q * q)


def rect_shape(q):
    q = np.asarray(q, dtype=float)
    return np.where(np.abs(q) < 0.5, 1.0, np.where(np.abs(q) == 0.5, 0.5, 0.0))


@dataclass(frozen=True)
class ModeSpectrum:
    """Unit-normalized spectral envelope f(q) with tilt kappa0 and bandwidth delta_kappa.

    ``extent`` is the half-width of the support of f in units of q (beyond
    it f is treated as zero); ``breaks`` lists interior points where f is
    not smooth, used to align quadrature panels.
    """

    envelope: Callable[[np.ndarray], np.ndarray]
    kappa0: float
    delta_kappa: float
    shape_tag: str = "custom"
    extent: float = GAUSSIAN_EXTENT
    breaks: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.delta_kappa > 0:
            raise ConstructionError(f"delta_kappa must be positive, got {self.delta_kappa}")

    @classmethod
    def gaussian(cls, kappa0: float, delta_kappa: float) -> "ModeSpectrum":
        return cls(gaussian_shape, kappa0, delta_kappa, "gaussian", GAUSSIAN_EXTENT)

    @classmethod
    def rect(cls, kappa0: float, delta_kappa: float) -> "ModeSpectrum":
        return cls(rect_shape, kappa0, delta_kappa, "rect", 0.5, (-0.5, 0.5))

    def f(self, q):
        return self.envelope(q)

    def mode_a(self, kappa):
        """Delta_kappa^(-1/2) f((kappa + kappa0)/Delta_kappa): beam centered at -kappa0."""
        return self.f((np.asarray(kappa) + self.kappa0) / self.delta_kappa) / math.sqrt(self.delta_kappa)

    def mode_b(self, kappa):
        """Delta_kappa^(-1/2) f(-(kappa - kappa0)/Delta_kappa): beam centered at +kappa0."""
        return self.f(-(np.asarray(kappa) - self.kappa0) / self.delta_kappa) / math.sqrt(self.delta_kappa)

    def q_breaks(self) -> np.ndarray:
        return np.unique(np.array([-self.extent, *self.breaks, self.extent], dtype=float))

    def norm(self, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
        total = 0.0
        qb = self.q_breaks()
        for lo, hi in zip(qb[:-1], qb[1:]):
            total += integrate_1d(lambda q: abs(complex(self.f(q))) ** 2, (lo, hi), quad, is_complex=False).value
        return total

    def overlap(self, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
        """|<A|B>|, the overlap of the two tilted modes (0 for orthogonal modes)."""
        s = self.kappa0 / self.delta_kappa
        # in q = (kappa + kappa0)/dk the overlap is int f(q) f*(2s - q) dq
        lo = max(-self.extent, 2 * s - self.extent)
        hi = min(self.extent, 2 * s + self.extent)
        if lo >= hi:
            return 0.0
        pts = [lo, hi, *[b for b in self.breaks if lo < b < hi], *[2 * s - b for b in self.breaks if lo < 2 * s - b < hi]]
        pts = np.unique(pts)
        total = 0j
        spec = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-16, max_panels=quad.max_panels)
        for a, b in zip(pts[:-1], pts[1:]):
            total += integrate_1d(
                lambda q: complex(self.f(q)) * np.conj(complex(self.f(2 * s - q))), (a, b), spec
            ).value
        return abs(total)

    def kappa_breaks(self) -> np.ndarray:
        """Break points in kappa covering both beams' supports."""
        qb = self.q_breaks() * self.delta_kappa
        return np.unique(np.concatenate([qb - self.kappa0, qb + self.kappa0]))


def check_mode_pair(mode: ModeSpectrum) -> float:
    """Validate the two-beam construction; returns the mode overlap."""
    ov = mode.overlap()
    if ov > OVERLAP_MAX:
        raise ConstructionError(
            f"modes A and B overlap by {ov:.3g} (> {OVERLAP_MAX:g}); increase kappa0/delta_kappa"
        )
    if ov > OVERLAP_TOL:
        warnings.warn(f"modes A and B overlap by {ov:.3g}; normalization is only approximate", stacklevel=3)
    return ov


class MomentumAmplitude:
    """Base class for an N-photon momentum amplitude phi(kappa_1, ..., kappa_N)."""

    variant: str = "abstract"
    n_photons: int

    def __call__(self, kappas) -> np.ndarray:
        raise NotImplementedError

    def kappa_breaks(self) -> np.ndarray:
        """Per-axis break points; the first and last bound the effective support."""
        raise NotImplementedError

    def support_box(self) -> tuple[float, float]:
        b = self.kappa_breaks()
        return float(b[0]), float(b[-1])


@dataclass(frozen=True)
class NoonAmplitude(MomentumAmplitude):
    mode: ModeSpectrum
    n_photons: int
    variant: str = field(default="noon", init=False)

    def __call__(self, kappas):
        k = np.asarray(kappas, dtype=float)
        dk, n = self.mode.delta_kappa, self.n_photons
        a = np.prod(self.mode.f((k + self.mode.kappa0) / dk), axis=-1)
        b = np.prod(self.mode.f(-(k - self.mode.kappa0) / dk), axis=-1)
        return (a + b) / math.sqrt(2 * dk**n) + 0j

    def kappa_breaks(self):
        return self.mode.kappa_breaks()


@dataclass(frozen=True)
class ClassicalAmplitude(MomentumAmplitude):
    mode: ModeSpectrum
    n_photons: int
    variant: str = field(default="classical_product", init=False)

    def one_photon(self, kappa):
        return (self.mode.mode_a(kappa) + self.mode.mode_b(kappa)) / math.sqrt(2)

    def __call__(self, kappas):
        k = np.asarray(kappas, dtype=float)
        return np.prod(self.one_photon(k), axis=-1) + 0j

    def kappa_breaks(self):
        return self.mode.kappa_breaks()


@dataclass(frozen=True)
class JointlyGaussianAmplitude(MomentumAmplitude):
    params: GaussianParams
    variant: str = field(default="jointly_gaussian", init=False)

    @property
    def n_photons(self):
        return self.params.n_photons

    @property
    def norm_constant(self) -> float:
        return normalization_constant(self.params)

    def phi_prime(self, k_avg, rel):
        """Amplitude in (K, kappa_1' .. kappa_{N-1}') with kappa_N' = -sum of the rest."""
        rel = np.asarray(rel, dtype=float)
        k_avg = np.asarray(k_avg, dtype=float)
        if self.n_photons == 1:
            rel_sq = np.zeros_like(k_avg)
        else:
            rel_sq = np.sum(rel * rel, axis=-1) + np.sum(rel, axis=-1) ** 2
        p = self.params
        return math.sqrt(self.norm_constant) * np.exp(-k_avg**2 / (4 * p.b_param**2) - rel_sq / (4 * p.beta_param**2))

    def __call__(self, kappas):
        k = np.asarray(kappas, dtype=float)
        k_avg = k.mean(axis=-1)
        rel = k - k_avg[..., None]
        p = self.params
        expo = -k_avg**2 / (4 * p.b_param**2) - np.sum(rel * rel, axis=-1) / (4 * p.beta_param**2)
        return math.sqrt(self.norm_constant / self.n_photons) * np.exp(expo) + 0j

    def kappa_breaks(self):
        p = self.params
        n = p.n_photons
        sigma = math.sqrt(p.b_param**2 + (1 - 1 / n) * p.beta_param**2)
        e = 10.0 * sigma
        return np.array([-e, e])


@dataclass(frozen=True, eq=False)
class CustomGridAmplitude(MomentumAmplitude):
    """Amplitude sampled on the uniform grid lower + spacing * arange(points) along every axis."""

    values: np.ndarray
    lower: float
    spacing: float
    variant: str = field(default="custom_grid", init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim < 1 or len(set(v.shape)) != 1:
            raise ConstructionError("custom grid must have equal length along every axis")
        if not self.spacing > 0:
            raise ConstructionError("grid spacing must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n_photons(self):
        return self.values.ndim

    @property
    def points(self) -> int:
        return self.values.shape[0]

    @property
    def axis(self) -> np.ndarray:
        return self.lower + self.spacing * np.arange(self.points)

    def __call__(self, kappas):
        k = np.asarray(kappas, dtype=float)
        axes = (self.axis,) * self.n_photons
        re = RegularGridInterpolator(axes, self.values.real, bounds_error=False, fill_value=0.0)
        im = RegularGridInterpolator(axes, self.values.imag, bounds_error=False, fill_value=0.0)
        flat = k.reshape(-1, self.n_photons)
        out = re(flat) + 1j * im(flat)
        return out.reshape(k.shape[:-1])

    def kappa_breaks(self):
        return np.array([self.axis[0], self.axis[-1]])

    def scaled(self, factor: complex) -> "CustomGridAmplitude":
        return CustomGridAmplitude(self.values * factor, self.lower, self.spacing)


def make_noon(mode: ModeSpectrum, n_photons: int) -> NoonAmplitude:
    if n_photons < 1:
        raise ConstructionError("n_photons must be at least 1")
    check_mode_pair(mode)
    return NoonAmplitude(mode, n_photons)


def make_classical(mode: ModeSpectrum, n_photons: int) -> ClassicalAmplitude:
    if n_photons < 1:
        raise ConstructionError("n_photons must be at least 1")
    check_mode_pair(mode)
    return ClassicalAmplitude(mode, n_photons)


def make_jointly_gaussian(params: GaussianParams) -> JointlyGaussianAmplitude:
    return JointlyGaussianAmplitude(params)


def evaluate_phi(amp: MomentumAmplitude, kappas) -> complex:
    k = np.asarray(kappas, dtype=float)
    if k.shape[-1:] != (amp.n_photons,):
        raise ValueError(f"expected {amp.n_photons} momenta, got shape {k.shape}")
    out = amp(k)
    return complex(out) if np.ndim(out) == 0 else out


class NormalizationResult(NamedTuple):
    value: float
    error: float
    method: str


def verify_normalization(
    amp: MomentumAmplitude,
    quad: QuadratureSpec = DEFAULT_QUAD,
    plan: RandomPlan | None = None,
) -> NormalizationResult:
    """Numerical integral of |phi|^2.

    Grids are summed with their own trapezoidal weights; N <= 3 uses the
    tensor rule; larger N falls back to uniform Monte Carlo over the
    support box and reports a one-sigma error bar.
    """
    n = amp.n_photons
    if isinstance(amp, CustomGridAmplitude):
        w = trapezoid_weights(amp.points, amp.spacing)
        dens = np.abs(amp.values) ** 2
        for _ in range(n):
            dens = dens @ w
        return NormalizationResult(float(dens), 0.0, "grid-trapezoid")
    breaks = amp.kappa_breaks()
    if n <= MAX_TENSOR_DIM:
        res = integrate_nd(lambda k: np.abs(amp(k)) ** 2, [breaks] * n, quad)
        return NormalizationResult(float(res.value), res.error, "tensor")
    plan = plan or RandomPlan(seed=0, n_samples=1_000_000)
    lo, hi = breaks[0], breaks[-1]
    volume = (hi - lo) ** n

    def sampler(rng, m):
        return rng.uniform(lo, hi, size=(m, n))

    est = mc_expectation(sampler, lambda k: volume * np.abs(amp(k)) ** 2, plan)
    return NormalizationResult(float(est.mean), float(est.std_error), "monte-carlo")


def verify_symmetry(amp: MomentumAmplitude, trials: int = 1000, seed: int = 0) -> float:
    """Largest change of phi under a random transposition of two arguments."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n = amp.n_photons
    if n == 1:
        return 0.0
    worst = 0.0
    if isinstance(amp, CustomGridAmplitude):
        v = amp.values
        for i in range(n):
            for j in range(i + 1, n):
                worst = max(worst, float(np.max(np.abs(v - np.swapaxes(v, i, j)))))
    rng = rng_from_seed(seed)
    lo, hi = amp.support_box()
    k = rng.uniform(lo, hi, size=(trials, n))
    pairs = np.array([rng.choice(n, size=2, replace=False) for _ in range(trials)])
    swapped = k.copy()
    rows = np.arange(trials)
    swapped[rows, pairs[:, 0]] = k[rows, pairs[:, 1]]
    swapped[rows, pairs[:, 1]] = k[rows, pairs[:, 0]]
    worst = max(worst, float(np.max(np.abs(amp(k) - amp(swapped)))))
    return worst


# --- grid file I/O -----------------------------------------------------------
#
# Text format, one item per line:
#   n_photons <N>
#   lower <first grid coordinate>
#   spacing <grid spacing>
#   points <samples per axis>
#   re,im
#   <points**N lines of "real,imag" in row-major (C) order>


def save_grid_amplitude(amp: CustomGridAmplitude, path) -> None:
    lines = [
        f"n_photons {amp.n_photons}",
        f"lower {float(amp.lower)!r}",
        f"spacing {float(amp.spacing)!r}",
        f"points {amp.points}",
        "re,im",
    ]
    lines += [f"{float(z.real)!r},{float(z.imag)!r}" for z in amp.values.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid_amplitude(path) -> CustomGridAmplitude:
    text = Path(path).read_text().splitlines()
    header = {}
    idx = 0
    for idx, line in enumerate(text):
        if line.strip() == "re,im":
            break
        key, _, val = line.partition(" ")
        header[key.strip()] = val.strip()
    else:
        raise ValueError(f"{path}: missing 're,im' column header")
    try:
        n = int(header["n_photons"])
        pts = int(header["points"])
        lower = float(header["lower"])
        spacing = float(header["spacing"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc.args[0]}") from None
    rows = [r for r in text[idx + 1 :] if r.strip()]
    if len(rows) != pts**n:
        raise ValueError(f"{path}: expected {pts ** n} samples, found {len(rows)}")
    data = np.array([[float(c) for c in r.split(",")] for r in rows])
    values = (data[:, 0] + 1j * data[:, 1]).reshape((pts,) * n)
    return CustomGridAmplitude(values, lower, spacing)
