"""Closed-form analytics of the jointly Gaussian N-photon state.

The state is Gaussian in the average momentum K (spread B) and in the
relative momenta kappa_n' = kappa_n - K (spread beta). All matrices that
appear are of the two-parameter form d*I + o*(J - I) and are handled by
:class:`StructuredMatrix`, which has closed-form determinant, inverse and
Cholesky factor for any size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConstructionError, DomainError
from .field_core import OpticalContext
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate_1d


@dataclass(frozen=True)
class StructuredMatrix:
    """Symmetric n x n matrix with every diagonal entry ``diag`` and every off-diagonal entry ``off``."""

    size: int
    diag: float
    off: float

    @property
    def _a(self):
        # eigenvalue on the subspace orthogonal to (1, ..., 1)
        return self.diag - self.off

    @property
    def _top(self):
        # eigenvalue along (1, ..., 1)
        return self.diag + (self.size - 1) * self.off

    def det(self) -> float:
        return self._a ** (self.size - 1) * self._top

    def inverse(self) -> "StructuredMatrix":
        a, top = self._a, self._top
        return StructuredMatrix(
            self.size,
            (top - self.off) / (a * top),
            -self.off / (a * top),
        )

    def dense(self) -> np.ndarray:
        m = np.full((self.size, self.size), self.off, dtype=float)
        np.fill_diagonal(m, self.diag)
        return m

    def cholesky(self) -> np.ndarray:
        """Lower-triangular L with L L^T equal to this matrix.

        Eliminating one row of a*I + b*J leaves a*I + b'*J with
        b' = a*b / (a + b), which gives every column in closed form.
        """
        a, b = self._a, self.off
        L = np.zeros((self.size, self.size))
        for k in range(self.size):
            pivot = math.sqrt(a + b)
            L[k, k] = pivot
            L[k + 1 :, k] = b / pivot
            b = a * b / (a + b)
        return L


@dataclass(frozen=True)
class GaussianParams:
    """Parameters (N, B, beta) of a jointly Gaussian state.

    ``kappa2_budget`` is the optional fixed per-photon momentum variance
    <kappa_n^2>; when given it must equal B^2 + (1 - 1/N) beta^2.
    """

    n_photons: int
    b_param: float
    beta_param: float = 1.0
    kappa2_budget: float | None = None

    def __post_init__(self):
        if self.n_photons < 1:
            raise ConstructionError("n_photons must be at least 1")
        if not self.b_param > 0:
            raise ConstructionError(f"B must be positive, got {self.b_param}")
        if not self.beta_param > 0:
            raise ConstructionError(f"beta must be positive, got {self.beta_param}")
        if self.kappa2_budget is not None:
            implied = self.b_param**2 + (1 - 1 / self.n_photons) * self.beta_param**2
            if abs(implied - self.kappa2_budget) > 1e-12 * max(1.0, self.kappa2_budget):
                raise ConstructionError(
                    f"B^2 + (1-1/N) beta^2 = {implied!r} does not match budget {self.kappa2_budget!r}"
                )

    @classmethod
    def from_reduction(cls, n_photons: int, r: float, kappa2_budget: float) -> "GaussianParams":
        """Parameters reaching spot-size reduction ``r`` at fixed <kappa_n^2>."""
        _check_r(n_photons, r)
        b2 = r * r * kappa2_budget / n_photons
        beta2 = kappa2_budget * (n_photons - r * r) / (n_photons - 1)
        return cls(n_photons, math.sqrt(b2), math.sqrt(beta2), kappa2_budget)

    @property
    def reduction_factor(self) -> float | None:
        if self.kappa2_budget is None:
            return None
        return math.sqrt(self.n_photons / self.kappa2_budget) * self.b_param


def relative_metric(n_photons: int) -> StructuredMatrix:
    """A with A_nm = delta_nm + 1, the quadratic form of sum_n kappa_n'^2 in N-1 free relative momenta."""
    return StructuredMatrix(n_photons - 1, 2.0, 1.0)


def amplitude_form(p: GaussianParams) -> StructuredMatrix:
    """Matrix M with phi proportional to exp(-kappa^T M kappa / 4) in single-photon momenta."""
    n, b2, beta2 = p.n_photons, p.b_param**2, p.beta_param**2
    return StructuredMatrix(
        n,
        1 / (n * n * b2) + (1 - 1 / n) / beta2,
        1 / (n * n * b2) - 1 / (n * beta2),
    )


def normalization_constant(p: GaussianParams) -> float:
    n = p.n_photons
    return math.sqrt(n / (2 * math.pi) ** n) / (p.b_param * p.beta_param ** (n - 1))


class MomentumCovariances(NamedTuple):
    var_K: float
    var_rel: float
    cov_rel: float
    var_kappa: float
    cov_kappa: float


def momentum_covariances(p: GaussianParams) -> MomentumCovariances:
    n, b2, beta2 = p.n_photons, p.b_param**2, p.beta_param**2
    return MomentumCovariances(
        var_K=b2,
        var_rel=(1 - 1 / n) * beta2,
        cov_rel=-beta2 / n,
        var_kappa=b2 + (1 - 1 / n) * beta2,
        cov_kappa=b2 - beta2 / n,
    )


def position_covariances(p: GaussianParams) -> tuple[float, float]:
    """(<x_n^2>, <x_n x_m>) of the paraxial configuration-space density."""
    m = amplitude_form(p)
    return m.diag / 4, m.off / 4


def analytic_pattern(p: GaussianParams, x, ctx: OpticalContext):
    """N-photon absorption rate of the jointly Gaussian state at positions ``x``."""
    n = p.n_photons
    peak = (
        math.factorial(n)
        * ctx.eta**n
        * math.sqrt(n)
        * (2 / math.pi) ** (n / 2)
        * p.b_param
        * p.beta_param ** (n - 1)
    )
    x = np.asarray(x, dtype=float)
    out = peak * np.exp(-2 * n * n * p.b_param**2 * x * x)
    return float(out) if out.ndim == 0 else out


class Widths(NamedTuple):
    W: float
    W_classical: float | None
    W_min: float | None


def rms_width(p: GaussianParams) -> Widths:
    """Closed-form spot widths W, W_C (standard limit) and W_min (ultimate limit).

    These are the closed forms in which the spot-size reduction r = W_C / W
    is defined. Note that the second moment of :func:`analytic_pattern` is
    1/(2NB), twice W; see :func:`second_moment_width`.
    """
    n = p.n_photons
    w = 1 / (4 * n * p.b_param)
    if p.kappa2_budget is None:
        return Widths(w, None, None)
    k2 = p.kappa2_budget
    return Widths(w, 1 / (4 * math.sqrt(n * k2)), 1 / (4 * n * math.sqrt(k2)))


def second_moment_width(
    p: GaussianParams, ctx: OpticalContext, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """sqrt(int x^2 I(x) dx / int I(x) dx) of the analytic pattern, by quadrature."""
    def rate(x):
        return analytic_pattern(p, x, ctx)

    m0 = integrate_1d(rate, (-np.inf, np.inf), quad, is_complex=False).value
    m2 = integrate_1d(lambda x: x * x * rate(x), (-np.inf, np.inf), quad, is_complex=False).value
    return math.sqrt(m2 / m0)


def _check_r(n_photons, r):
    if n_photons < 2:
        raise DomainError("trade-off curves need N >= 2")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r >= math.sqrt(n_photons)):
        raise DomainError(f"r must lie in the open interval (0, sqrt({n_photons}))")


def total_rate_ratio(n_photons: int, r):
    """R_tot(r): total absorption relative to the classical state at equal <kappa_n^2>."""
    _check_r(n_photons, r)
    r = np.asarray(r, dtype=float)
    n = n_photons
    return ((n - r * r) / (n - 1)) ** ((n - 1) / 2)


def peak_rate_ratio(n_photons: int, r):
    """R(r) = r * R_tot(r): peak absorption relative to the classical state."""
    return np.asarray(r, dtype=float) * total_rate_ratio(n_photons, r)


def limit_total_rate_ratio(r):
    """Large-N limit exp((1 - r^2)/2) of R_tot."""
    r = np.asarray(r, dtype=float)
    return np.exp((1 - r * r) / 2)


def limit_peak_rate_ratio(r):
    r = np.asarray(r, dtype=float)
    return r * limit_total_rate_ratio(r)


def total_rate_ratio_at_zero(n_photons: int) -> float:
    """The r -> 0 limit of R_tot, reported separately since r = 0 is excluded from curves."""
    n = n_photons
    return (n / (n - 1)) ** ((n - 1) / 2)


@dataclass(frozen=True)
class TradeoffTable:
    n_photons: int
    r: np.ndarray
    R: np.ndarray
    R_tot: np.ndarray

    def rows(self):
        return list(zip(self.r.tolist(), self.R.tolist(), self.R_tot.tolist()))


def tradeoff_curves(n_photons: int, r_grid) -> TradeoffTable:
    r = np.asarray(r_grid, dtype=float)
    r_tot = total_rate_ratio(n_photons, r)
    return TradeoffTable(n_photons, r, r * r_tot, r_tot)


def open_r_grid(n_photons: int, points: int = 200) -> np.ndarray:
    """Uniform grid on (0, sqrt(N)) with both endpoints excluded."""
    return np.linspace(0, math.sqrt(n_photons), points + 2)[1:-1]


def classical_reference(p: GaussianParams) -> GaussianParams:
    """Uncorrelated-photon parameters B^2 = beta^2/N = <kappa_n^2>/N at the same budget."""
    if p.kappa2_budget is None:
        raise ConstructionError("classical_reference needs kappa2_budget")
    k2, n = p.kappa2_budget, p.n_photons
    return GaussianParams(n, math.sqrt(k2 / n), math.sqrt(k2), k2)


def momentum_sampler(p: GaussianParams):
    """Sampler of (K, kappa_1' .. kappa_N') from |phi'|^2.

    Draws come from the precision matrices of the density itself: K has
    precision 1/B^2 and the N-1 free relative momenta have precision
    A / beta^2. With A = L L^T, solving L^T y = z maps white noise onto the
    target; the dependent kappa_N' = -sum of the others is appended.
    Returns an array of shape (n, N + 1): column 0 is K.
    """
    n_ph = p.n_photons
    L = relative_metric(n_ph).cholesky() if n_ph > 1 else None

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        k_avg = p.b_param * rng.standard_normal(n)
        out = np.empty((n, n_ph + 1))
        out[:, 0] = k_avg
        if n_ph == 1:
            out[:, 1] = 0.0
            return out
        z = rng.standard_normal((n, n_ph - 1))
        rel = p.beta_param * _back_substitute(L.T, z)
        out[:, 1:n_ph] = rel
        out[:, n_ph] = -rel.sum(axis=1)
        return out

    return sample


def _back_substitute(upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # solves upper @ y = rhs row-wise for each sample in rhs (shape (n, m))
    m = upper.shape[0]
    y = np.zeros_like(rhs)
    for i in range(m - 1, -1, -1):
        y[:, i] = (rhs[:, i] - y[:, i + 1 :] @ upper[i, i + 1 :]) / upper[i, i]
    return y
