"""Report bundles and their on-disk forms: CSV tables, JSON summary, plotdata and PNG figures.

Layout of an emitted report directory::

    summary.json              versioned summary (SCHEMA_VERSION)
    <table>.csv               one file per table, header row of column names
    plotdata/<curve>.dat      two columns "x y", '#' header lines with labels
    figures/<figure>.png      rendered with the Agg backend

Every number is written with 17 significant digits so files round-trip
exactly and reruns with the same inputs are byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

SCHEMA_VERSION = "1.0"
FORMATS = ("csv", "json", "plotdata", "png")

FIGURE_STYLE = {
    "font.size": 9,
    "font.family": "DejaVu Sans",
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.linewidth": 0.8,
}
FIG_SIZE = (5.0, 3.4)
DPI = 150


@dataclass(frozen=True)
class Check:
    """One asserted quantity: measured against expected under a stated comparison."""

    name: str
    measured: Any
    expected: Any
    tolerance: float | None
    comparison: str
    passed: bool
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        tol = "" if self.tolerance is None else f" tol={_fmt(self.tolerance)}"
        return f"{tag} {self.name}: measured={_fmt(self.measured)} expected={_fmt(self.expected)} [{self.comparison}{tol}]"


class Checker:
    """Builds :class:`Check` records; every tolerance is multiplied by ``scale``."""

    def __init__(self, scale: float = 1.0):
        if not scale > 0:
            raise ValueError("tolerance scale must be positive")
        self.scale = scale
        self.checks: list[Check] = []

    def _add(self, *args, **kw) -> Check:
        c = Check(*args, **kw)
        self.checks.append(c)
        return c

    def close(self, name, measured, expected, tol, relative=False, note=""):
        tol = tol * self.scale
        measured, expected = float(measured), float(expected)
        err = abs(measured - expected)
        if relative:
            err /= abs(expected) if expected != 0 else 1.0
        return self._add(name, measured, expected, tol, "rel" if relative else "abs", bool(err <= tol), note)

    def at_most(self, name, measured, limit, note=""):
        measured = float(measured)
        return self._add(name, measured, float(limit), None, "<=", bool(measured <= limit), note)

    def at_least(self, name, measured, limit, note=""):
        measured = float(measured)
        return self._add(name, measured, float(limit), None, ">=", bool(measured >= limit), note)

    def within_sigma(self, name, measured, expected, sigma, n_sigma, note=""):
        tol = n_sigma * float(sigma) * self.scale
        err = abs(float(measured) - float(expected))
        return self._add(name, float(measured), float(expected), tol, "abs(sigma)", bool(err <= tol), note)

    def truth(self, name, value, expected=True, note=""):
        return self._add(name, value, expected, None, "==", bool(value == expected), note)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass
class Table:
    columns: Sequence[str]
    rows: list

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {row!r} does not match columns {list(self.columns)}")


@dataclass
class Curve:
    x: np.ndarray
    y: np.ndarray
    xlabel: str
    ylabel: str
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape:
            raise ValueError("curve x and y must have equal shapes")


@dataclass
class FigureSpec:
    name: str
    title: str
    xlabel: str
    ylabel: str
    curves: list[str]
    logx: bool = False
    logy: bool = False
    styles: dict = field(default_factory=dict)


@dataclass
class ReportBundle:
    kind: str
    parameters: dict
    checks: list[Check]
    tables: dict[str, Table] = field(default_factory=dict)
    curves: dict[str, Curve] = field(default_factory=dict)
    figures: list[FigureSpec] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self, files: Sequence[str] = ()) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "parameters": _jsonable(self.parameters),
            "checks": [
                {
                    "name": c.name,
                    "measured": _jsonable(c.measured),
                    "expected": _jsonable(c.expected),
                    "tolerance": _jsonable(c.tolerance),
                    "comparison": c.comparison,
                    "pass": c.passed,
                    **({"note": c.note} if c.note else {}),
                }
                for c in self.checks
            ],
            "all_pass": self.all_passed,
            "notes": list(self.notes),
            "files": sorted(files),
        }


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def _num(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, Path):
        return str(v)
    return v


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return str(v)


def write_table(table: Table, path: Path) -> None:
    lines = [",".join(table.columns)]
    lines += [",".join(_cell(v) for v in row) for row in table.rows]
    path.write_text("\n".join(lines) + "\n")


def write_curve(curve: Curve, path: Path) -> None:
    lines = [f"# x: {curve.xlabel}", f"# y: {curve.ylabel}"]
    if curve.label:
        lines.append(f"# curve: {curve.label}")
    lines += [f"{_num(x)} {_num(y)}" for x, y in zip(curve.x, curve.y)]
    path.write_text("\n".join(lines) + "\n")


def render_figure(spec: FigureSpec, curves: dict[str, Curve], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context(FIGURE_STYLE):
        fig, ax = plt.subplots(figsize=FIG_SIZE)
        for name in spec.curves:
            c = curves[name]
            ax.plot(c.x, c.y, label=c.label or name, **spec.styles.get(name, {}))
        if spec.logx:
            ax.set_xscale("log")
        if spec.logy:
            ax.set_yscale("log")
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel)
        ax.set_title(spec.title)
        if len(spec.curves) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=DPI, metadata={"Software": None})
        plt.close(fig)


def emit_report(bundle: ReportBundle, out_dir, formats: Sequence[str] = FORMATS) -> list[Path]:
    """Write the bundle under ``out_dir`` and return the files written."""
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}; choose from {FORMATS}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    written: list[Path] = []
    if "csv" in formats:
        for name, table in bundle.tables.items():
            p = out / f"{name}.csv"
            write_table(table, p)
            written.append(p)
    if "plotdata" in formats and bundle.curves:
        (out / "plotdata").mkdir(exist_ok=True)
        for name, curve in bundle.curves.items():
            p = out / "plotdata" / f"{name}.dat"
            write_curve(curve, p)
            written.append(p)
    if "png" in formats and bundle.figures:
        (out / "figures").mkdir(exist_ok=True)
        for spec in bundle.figures:
            p = out / "figures" / f"{spec.name}.png"
            render_figure(spec, bundle.curves, p)
            written.append(p)
    if "json" in formats:
        p = out / "summary.json"
        rel = [str(w.relative_to(out)) for w in written] + ["summary.json"]
        p.write_text(json.dumps(bundle.summary(rel), indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written
