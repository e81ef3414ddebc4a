"""Shared numerical engine.

Adaptive 1D quadrature (QUADPACK Gauss-Kronrod through scipy) with an
optional sine map that removes inverse-square-root endpoint singularities,
composite Gauss-Legendre tensor rules for up to three dimensions, a
continuous-convention grid Fourier transform, and a chunked Monte Carlo
engine driven by the counter-based Philox generator.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .errors import CapabilityError, ConvergenceError, ResolutionError

MAX_TENSOR_DIM = 3
PANEL_ORDER = 16
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and resolution for every integration routine.

    ``max_panels`` bounds the number of adaptive subintervals in 1D;
    ``grid_points_per_dim`` is the node count per axis for tensor rules.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_panels: int = 200
    edge_clustering: bool = False
    grid_points_per_dim: int = 128

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be nonnegative")
        if self.max_panels < 8:
            raise ValueError("max_panels must be at least 8")
        if self.grid_points_per_dim < 16:
            raise ValueError("grid_points_per_dim must be at least 16")


DEFAULT_QUAD = QuadratureSpec()


class QuadResult(NamedTuple):
    value: complex | float
    error: float


def _quad_real(f, a, b, epsabs, spec):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=spec.rel_tol, limit=spec.max_panels)
    bad = [w for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    return value, err, (str(bad[0].message) if bad else None)


def _quad(f, a, b, spec, is_complex):
    if not is_complex:
        value, err, msg = _quad_real(f, a, b, spec.abs_tol, spec)
        parts = [(value, err, msg)]
    else:
        parts = [
            _quad_real(lambda t: complex(f(t)).real, a, b, spec.abs_tol, spec),
            _quad_real(lambda t: complex(f(t)).imag, a, b, spec.abs_tol, spec),
        ]
        # the relative tolerance refers to |value|; a part that vanishes by
        # symmetry cannot meet it on its own, so retry it against the modulus
        scale = abs(complex(parts[0][0], parts[1][0]))
        loose = max(spec.abs_tol, spec.rel_tol * scale)
        parts = [
            _quad_real((lambda t, i=i: complex(f(t)).imag if i else complex(f(t)).real), a, b, loose, spec)
            if msg and loose > spec.abs_tol
            else (v, e, msg)
            for i, (v, e, msg) in enumerate(parts)
        ]
        value = complex(parts[0][0], parts[1][0])
    err = math.hypot(*(p[1] for p in parts))
    msg = next((p[2] for p in parts if p[2]), None)
    if msg:
        raise ConvergenceError(f"quadrature did not converge on [{a}, {b}]: {msg}", best=value, error=float(err))
    return value, float(err)


def integrate_1d(
    f: Callable[[float], complex],
    bounds: tuple[float, float],
    spec: QuadratureSpec = DEFAULT_QUAD,
    *,
    is_complex: bool = True,
) -> QuadResult:
    """Integrate ``f`` over ``bounds`` adaptively.

    With ``spec.edge_clustering`` the substitution u = m + h sin(t) is
    applied, so integrands behaving like (edge distance)^(-1/2) become
    bounded. Infinite bounds are passed straight to QUADPACK.
    """
    a, b = bounds
    if spec.edge_clustering:
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ValueError("edge clustering needs finite bounds")
        mid, half = 0.5 * (a + b), 0.5 * (b - a)

        def g(t):
            return f(mid + half * math.sin(t)) * half * math.cos(t)

        value, err = _quad(g, -0.5 * math.pi, 0.5 * math.pi, spec, is_complex)
    else:
        value, err = _quad(f, a, b, spec, is_complex)
    return QuadResult(value, err)


def gauss_legendre_panels(
    breaks: Sequence[float], n_points: int, order: int = PANEL_ORDER
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights.

    The interval [breaks[0], breaks[-1]] is split at every break (so
    discontinuities can be placed on panel edges) and roughly ``n_points``
    nodes are distributed over the pieces in proportion to their length.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    if breaks.size < 2:
        raise ValueError("need at least two distinct break points")
    lengths = np.diff(breaks)
    total_panels = max(len(lengths), int(math.ceil(n_points / order)))
    share = np.maximum(1, np.round(total_panels * lengths / lengths.sum())).astype(int)
    ref_x, ref_w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for left, right, count in zip(breaks[:-1], breaks[1:], share):
        edges = np.linspace(left, right, count + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            nodes.append(0.5 * (hi + lo) + half * ref_x)
            weights.append(half * ref_w)
    return np.concatenate(nodes), np.concatenate(weights)


def tensor_rule(
    breaks_per_dim: Sequence[Sequence[float]], spec: QuadratureSpec = DEFAULT_QUAD
) -> list[tuple[np.ndarray, np.ndarray]]:
    """One composite Gauss-Legendre rule per axis."""
    if len(breaks_per_dim) > MAX_TENSOR_DIM:
        raise CapabilityError(
            f"tensor quadrature is limited to {MAX_TENSOR_DIM} dimensions; "
            "use a structured fast path or Monte Carlo"
        )
    return [gauss_legendre_panels(b, spec.grid_points_per_dim) for b in breaks_per_dim]


def _tensor_sum(f, rules):
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    pts = np.stack(grids, axis=-1)
    vals = np.asarray(f(pts))
    for axis_w in reversed([r[1] for r in rules]):
        vals = vals @ axis_w
    return vals


def integrate_nd(
    f: Callable[[np.ndarray], np.ndarray],
    box: Sequence[Sequence[float]],
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> QuadResult:
    """Tensor-product Gauss-Legendre integral of a vectorized ``f``.

    ``box`` gives, per dimension, either (lo, hi) or a longer sequence of
    break points. ``f`` receives an array of shape (..., d). The error
    estimate is the difference from the same rule at half resolution.
    """
    if len(box) > MAX_TENSOR_DIM:
        raise CapabilityError(
            f"integrate_nd supports at most {MAX_TENSOR_DIM} dimensions, got {len(box)}"
        )
    fine = tensor_rule(box, spec)
    coarse_spec = QuadratureSpec(
        rel_tol=spec.rel_tol,
        abs_tol=spec.abs_tol,
        max_panels=spec.max_panels,
        grid_points_per_dim=max(16, spec.grid_points_per_dim // 2),
    )
    coarse = tensor_rule(box, coarse_spec)
    value = _tensor_sum(f, fine)
    err = abs(value - _tensor_sum(f, coarse))
    if np.iscomplexobj(value):
        return QuadResult(complex(value), float(err))
    return QuadResult(float(value), float(err))


def trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


def grid_fourier(
    samples: np.ndarray,
    lower: float,
    spacing: float,
    targets,
    axis: int = 0,
    *,
    sign: int = 1,
    points_per_fringe: int = 8,
) -> np.ndarray:
    """Continuous Fourier transform of uniformly sampled data.

    Approximates (2 pi)^(-1/2) * integral f(k) exp(sign * i k x) dk along
    ``axis`` with trapezoidal weights. The transformed axis is replaced by
    one axis over ``targets``. Raises ResolutionError when the kernel at
    the largest |x| would get fewer than ``points_per_fringe`` samples per
    period.
    """
    samples = np.asarray(samples)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    n = samples.shape[axis]
    xmax = float(np.max(np.abs(targets))) if targets.size else 0.0
    if xmax > 0 and spacing * xmax > 2.0 * math.pi / points_per_fringe:
        need = xmax * points_per_fringe / (2.0 * math.pi)
        raise ResolutionError(
            f"grid spacing {spacing:g} aliases at |x|={xmax:g}; "
            f"need spacing <= {1.0 / need:g}"
        )
    k = lower + spacing * np.arange(n)
    kernel = np.exp(sign * 1j * np.outer(k, targets)) * trapezoid_weights(n, spacing)[:, None]
    moved = np.moveaxis(samples, axis, -1)
    out = moved @ kernel * INV_SQRT_2PI
    return np.moveaxis(out, -1, axis)


# --- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class RandomPlan:
    """Seeded sampling plan.

    Samples are generated in fixed-size chunks; chunk ``j`` of stream ``s``
    draws from Philox keyed by ``seed`` with counter words (0, 0, j, s), so
    any chunk can be produced by any worker and the result never depends on
    how chunks are distributed.
    """

    seed: int
    n_samples: int
    stream_id: int = 0
    chunk_size: int = 1 << 16

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.stream_id < 0 or self.chunk_size < 1:
            raise ValueError("stream_id must be >= 0 and chunk_size >= 1")

    @property
    def n_chunks(self) -> int:
        return -(-self.n_samples // self.chunk_size)

    def chunk_length(self, index: int) -> int:
        return min(self.chunk_size, self.n_samples - index * self.chunk_size)

    def generator(self, index: int) -> np.random.Generator:
        counter = np.array([0, 0, index, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self.seed, counter=counter))


def rng_from_seed(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Single Philox stream, for small non-chunked draws."""
    return RandomPlan(seed=seed, n_samples=1, stream_id=stream_id).generator(0)


class MCEstimate(NamedTuple):
    mean: np.ndarray | float
    std_error: np.ndarray | float


def _chunk_moments(sampler, observable, plan, index):
    n = plan.chunk_length(index)
    samples = sampler(plan.generator(index), n)
    vals = np.asarray(observable(samples), dtype=float)
    mean = vals.mean(axis=0)
    m2 = ((vals - mean) ** 2).sum(axis=0)
    return n, mean, m2


def mc_expectation(
    density_sampler: Callable[[np.random.Generator, int], np.ndarray],
    observable: Callable[[np.ndarray], np.ndarray],
    plan: RandomPlan,
    workers: int = 1,
) -> MCEstimate:
    """Monte Carlo mean of ``observable`` under ``density_sampler``.

    ``observable`` may return shape (n,) or (n, k). Chunk statistics are
    merged in chunk order with the pairwise update of Chan et al., which
    keeps the estimate bit-identical for any ``workers``.
    """
    indices = range(plan.n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda i: _chunk_moments(density_sampler, observable, plan, i), indices))
    else:
        parts = [_chunk_moments(density_sampler, observable, plan, i) for i in indices]

    n_tot, mean, m2 = parts[0]
    for n_b, mean_b, m2_b in parts[1:]:
        n_new = n_tot + n_b
        delta = mean_b - mean
        mean = mean + delta * (n_b / n_new)
        m2 = m2 + m2_b + delta**2 * (n_tot * n_b / n_new)
        n_tot = n_new
    if n_tot > 1:
        std_err = np.sqrt(m2 / (n_tot - 1) / n_tot)
    else:
        std_err = np.zeros_like(mean)
    if np.ndim(mean) == 0:
        return MCEstimate(float(mean), float(std_err))
    return MCEstimate(mean, std_err)
