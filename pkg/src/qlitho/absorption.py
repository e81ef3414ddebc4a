"""N-photon absorption rates, sampled patterns and fringe metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import CapabilityError, DomainError, ResolutionError
from .field_core import OpticalContext, schwarz_bound_density
from .numerics import DEFAULT_QUAD, QuadratureSpec, gauss_legendre_panels
from .propagate import PARAXIAL, diagonal_amplitude, psi
from .states import ClassicalAmplitude, MomentumAmplitude, NoonAmplitude

BOUND_SLACK = 1e-9
MIN_POINTS_PER_FRINGE = 8
CSV_COLUMNS = ("x", "rate")


@dataclass
class PatternScan:
    """A sampled 1D pattern with its provenance.

    Serialized as a two-column CSV (``x,rate``) plus a JSON sidecar holding
    every other field.
    """

    grid: np.ndarray
    values: np.ndarray
    n_photons: int
    state_label: str
    eta_used: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1D arrays of equal length")
        if np.any(self.values < 0):
            raise ValueError("pattern values must be nonnegative")

    def to_csv(self, path) -> Path:
        path = Path(path)
        rows = [",".join(CSV_COLUMNS)]
        rows += [f"{x:.17g},{v:.17g}" for x, v in zip(self.grid, self.values)]
        path.write_text("\n".join(rows) + "\n")
        sidecar = path.with_suffix(".json")
        meta = {
            "n_photons": self.n_photons,
            "state_label": self.state_label,
            "eta_used": self.eta_used,
            "columns": list(CSV_COLUMNS),
            "metadata": self.metadata,
        }
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "PatternScan":
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(path.with_suffix(".json").read_text())
        return cls(
            data[:, 0],
            data[:, 1],
            meta["n_photons"],
            meta["state_label"],
            meta["eta_used"],
            meta.get("metadata", {}),
        )


def absorption_rate_at(
    amp: MomentumAmplitude,
    x,
    regime: str = PARAXIAL,
    ctx: OpticalContext | None = None,
    quad: QuadratureSpec = DEFAULT_QUAD,
    method: str = "auto",
):
    """<:I^N(x):> = N! eta^N |psi(x, ..., x)|^2."""
    eta = ctx.eta if ctx is not None else 1.0
    n = amp.n_photons
    amp_x = diagonal_amplitude(amp, x, regime, ctx, quad, method)
    out = math.factorial(n) * eta**n * np.abs(amp_x) ** 2
    return float(out) if np.ndim(out) == 0 else out


def fringe_period_hint(amp: MomentumAmplitude) -> float | None:
    """pi/(N kappa0) for two-beam states, the finest fringe they can produce."""
    if isinstance(amp, (NoonAmplitude, ClassicalAmplitude)) and amp.mode.kappa0 != 0:
        return math.pi / (amp.n_photons * abs(amp.mode.kappa0))
    return None


def _check_grid(grid, amp):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1D sequence of at least two positions")
    steps = np.diff(grid)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0) or steps[0] <= 0:
        raise ValueError("grid must be uniform and increasing")
    period = fringe_period_hint(amp)
    if period is not None and steps[0] > period / MIN_POINTS_PER_FRINGE:
        raise ResolutionError(
            f"grid spacing {steps[0]:g} gives fewer than {MIN_POINTS_PER_FRINGE} points per "
            f"fringe period {period:g}; use spacing <= {period / MIN_POINTS_PER_FRINGE:g}"
        )
    return grid


def absorption_pattern(
    amp: MomentumAmplitude,
    grid,
    regime: str = PARAXIAL,
    ctx: OpticalContext | None = None,
    quad: QuadratureSpec = DEFAULT_QUAD,
    label: str | None = None,
    method: str = "auto",
    metadata: dict | None = None,
) -> PatternScan:
    """Absorption rate on a uniform grid, checked against the universal ceiling."""
    if ctx is None:
        raise ValueError("absorption_pattern needs an OpticalContext for eta and the rate ceiling")
    grid = _check_grid(grid, amp)
    values = absorption_rate_at(amp, grid, regime, ctx, quad, method)
    bound = schwarz_bound_density(ctx, amp.n_photons)
    peak = float(np.max(values))
    if peak > bound * (1 + BOUND_SLACK):
        raise DomainError(
            f"pattern peak {peak:.6g} exceeds the N-photon ceiling {bound:.6g}; "
            "the state's momenta are not confined to the light cone"
        )
    meta = {"regime": regime, "bound": bound, "variant": amp.variant}
    meta.update(metadata or {})
    return PatternScan(grid, values, amp.n_photons, label or amp.variant, ctx.eta, meta)


class FringeMetrics(NamedTuple):
    period: float | None
    peak: float
    visibility: float | None


def local_maxima(grid, values, rel_floor: float = 1e-9) -> np.ndarray:
    """Sub-grid positions of interior local maxima by three-point parabolic fits."""
    v = np.asarray(values, dtype=float)
    x = np.asarray(grid, dtype=float)
    h = x[1] - x[0]
    floor = rel_floor * v.max()
    idx = np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] > floor))[0] + 1
    left, mid, right = v[idx - 1], v[idx], v[idx + 1]
    curv = left - 2 * mid + right
    shift = np.where(curv != 0, 0.5 * (left - right) / np.where(curv != 0, curv, 1), 0.0)
    return x[idx] + h * shift


def fringe_metrics(scan: PatternScan) -> FringeMetrics:
    """Mean peak spacing, peak value, and visibility over the central period.

    Needs at least three maxima for a period; otherwise period and
    visibility are reported as None.
    """
    peak = float(scan.values.max())
    maxima = local_maxima(scan.grid, scan.values)
    if maxima.size < 3:
        return FringeMetrics(None, peak, None)
    period = float((maxima[-1] - maxima[0]) / (maxima.size - 1))
    center = 0.5 * (scan.grid[0] + scan.grid[-1])
    central = maxima[np.argmin(np.abs(maxima - center))]
    # half a grid step of margin keeps the samples nearest the bounding minima
    h = scan.grid[1] - scan.grid[0]
    window = np.abs(scan.grid - central) <= 0.5 * (period + h)
    vmax, vmin = scan.values[window].max(), scan.values[window].min()
    vis = float((vmax - vmin) / (vmax + vmin)) if vmax + vmin > 0 else None
    return FringeMetrics(period, peak, vis)


def discrete_absorber_pattern(
    amp: MomentumAmplitude,
    absorber_width: float,
    grid,
    regime: str = PARAXIAL,
    ctx: OpticalContext | None = None,
    nodes_per_dim: int = 16,
) -> PatternScan:
    """Probability density P(xi) of all N photons landing in the absorber at xi.

    P(xi) * dxi is the integral of |psi|^2 over the box of side dxi centred
    at (xi, ..., xi). As dxi -> 0, P(xi) / dxi^(N-1) -> |psi(xi, ..., xi)|^2.
    """
    if absorber_width <= 0:
        raise ValueError("absorber_width must be positive")
    if regime != PARAXIAL:
        raise DomainError("the configuration-space absorber model holds only in the paraxial regime")
    n = amp.n_photons
    if n > 3:
        raise CapabilityError("the exact bin integral is limited to N <= 3")
    grid = np.asarray(grid, dtype=float)
    half = 0.5 * absorber_width
    offs, w = gauss_legendre_panels([-half, half], nodes_per_dim, order=nodes_per_dim)
    mesh = np.stack(np.meshgrid(*([offs] * n), indexing="ij"), axis=-1)
    weight = w
    for _ in range(n - 1):
        weight = np.multiply.outer(weight, w)
    pts = grid.reshape((-1,) + (1,) * (n + 1)) + mesh[None]
    dens = np.abs(psi(amp, pts, regime, ctx)) ** 2
    probs = np.tensordot(dens, weight, axes=n)
    values = probs / absorber_width
    meta = {"absorber_width": absorber_width, "quantity": "absorption probability density"}
    eta = ctx.eta if ctx is not None else 1.0
    return PatternScan(grid, values, n, f"{amp.variant}-absorber", eta, meta)
