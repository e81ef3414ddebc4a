"""Scenario files: parsing, parameter schemas and fail-fast validation.

A scenario is a mapping with three top-level keys::

    kind: noon_compare          # required, one of KINDS
    output_dir: reports/noon    # optional, default reports/<kind>
    parameters:                 # optional, every key must belong to the kind
      N: [2, 3]
      kappa0: 1.0

Files ending in ``.json`` are read as JSON; anything else as YAML. All
lengths are in units of the wavelength unless ``units: si`` is given, in
which case lengths are metres and momenta are inverse metres.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .errors import ScenarioParseError, ScenarioValidationError
from .field_core import SPEED_OF_LIGHT, OpticalContext

KINDS = (
    "noon_compare",
    "gaussian_tradeoff",
    "gaussian_pattern",
    "dangelo_angular",
    "dangelo_alpha_scan",
    "bound_audit",
    "rotation_audit",
    "absorber_convergence",
)
TOP_LEVEL_KEYS = ("kind", "output_dir", "parameters")


@dataclass(frozen=True)
class Param:
    """Schema entry: default, value type, constraint and physical dimension.

    ``dim`` is "length", "momentum" or None. Defaults are written in
    wavelength units and rescaled when a scenario uses SI units.
    """

    default: Any
    type: str
    check: Callable[[Any], str | None] | None = None
    dim: str | None = None
    choices: tuple = ()
    help: str = ""


def positive(v):
    return None if v > 0 else "must be positive"


def nonnegative(v):
    return None if v >= 0 else "must be nonnegative"


def at_least(lo):
    def check(v):
        return None if v >= lo else f"must be >= {lo}"
    return check


def in_range(lo, hi):
    def check(v):
        return None if lo <= v <= hi else f"must lie in [{lo}, {hi}]"
    return check


def each(check):
    def run(values):
        for v in values:
            msg = check(v)
            if msg:
                return f"entry {v!r} {msg}"
        return None
    return run


def nonempty_each(check):
    def run(values):
        if len(values) == 0:
            return "must not be empty"
        return each(check)(values)
    return run


COMMON = {
    "units": Param("lambda", "choice", choices=("lambda", "si"), help="length unit convention"),
    "wavelength": Param(1.0, "float", positive, "length", help="free-space wavelength"),
    "eta": Param(1.0, "float", positive, help="one-photon intensity scale"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "noon_compare": {
        "N": Param([1, 2, 3, 4, 5], "int_list", nonempty_each(in_range(1, 12))),
        "kappa0": Param(1.0, "float", positive, "momentum"),
        "delta_kappa": Param(0.02, "float", positive, "momentum"),
        "shape": Param("gaussian", "choice", choices=("gaussian", "rect")),
        "regime": Param("paraxial", "choice", choices=("paraxial", "nonparaxial")),
        "scan_points": Param(512, "int", at_least(16)),
        "scan_periods": Param(2.5, "float", positive, help="half-width in units of pi/kappa0"),
        "quadrature_N": Param([2, 3], "int_list", each(in_range(1, 3))),
        "ratio_tolerance": Param(1e-6, "float", positive),
        "quadrature_tolerance": Param(1e-3, "float", positive),
        "period_tolerance": Param(0.01, "float", positive),
        "envelope_tolerance": Param(1e-6, "float", positive),
    },
    "gaussian_tradeoff": {
        "N": Param([2, 3, 5, 10], "int_list", nonempty_each(at_least(2))),
        "r_points": Param(200, "int", at_least(3)),
        "limit_N": Param([10, 100, 1000], "int_list", nonempty_each(at_least(2))),
        "kappa2_budget": Param(1.0, "float", positive, help="per-photon <kappa^2>"),
        "asymptote_N": Param(100, "int", at_least(2)),
        "asymptote_expected": Param(1.6445, "float"),
        "asymptote_tolerance": Param(5e-4, "float", positive),
        "limit_rel_tolerance": Param(3e-3, "float", positive),
        "identity_tolerance": Param(1e-12, "float", positive),
        "endpoint_tolerance": Param(1e-3, "float", positive),
    },
    "gaussian_pattern": {
        "N": Param(2, "int", in_range(1, 8)),
        "B": Param(0.5, "float", positive, "momentum"),
        "beta": Param(1.0, "float", positive, "momentum"),
        "x_points": Param(21, "int", at_least(3)),
        "x_halfwidth": Param(1.0, "float", positive, "length"),
        "pattern_tolerance": Param(1e-6, "float", positive),
        "norm_tolerance": Param(1e-6, "float", positive),
        "width_tolerance": Param(1e-8, "float", positive),
        "random_draws": Param(10, "int", at_least(0)),
        "seed": Param(1, "int", nonnegative),
        "mc_samples": Param(1_000_000, "int", at_least(1000)),
        "mc_sigma": Param(3.0, "float", positive),
        "covariance_cases": Param([[2, 0.5, 1.0], [2, 1.0, 1.0], [3, 0.2, 1.5]], "case_list"),
    },
    "dangelo_angular": {
        "a": Param(20.0, "float", positive, "length"),
        "b": Param(60.0, "float", positive, "length"),
        "alpha": Param(1.0, "float", positive, "length"),
        "epsilon": Param(0.1, "float", in_range(0.0, 1.0)),
        "corr_shape": Param("gaussian", "choice", choices=("gaussian", "rect")),
        "theta_max": Param(0.05, "float", positive, help="radians"),
        "theta_points": Param(401, "int", at_least(11)),
        "duality_points": Param(21, "int", at_least(3)),
        "duality_tolerance": Param(1e-6, "float", positive),
        "symmetry_tolerance": Param(1e-12, "float", positive),
    },
    "dangelo_alpha_scan": {
        "a": Param(20.0, "float", positive, "length"),
        "b": Param(60.0, "float", positive, "length"),
        "alphas": Param([0.25, 0.5, 1.0, 2.0], "float_list", nonempty_each(positive), "length"),
        "theta": Param(0.0, "float", help="radians"),
        "epsilon": Param(0.1, "float", in_range(0.0, 1.0)),
        "corr_shape": Param("gaussian", "choice", choices=("gaussian", "rect")),
        "residual_tolerance": Param(1e-10, "float", positive),
        "r_squared_min": Param(0.999, "float", in_range(0.0, 1.0)),
        "agreement_tolerance": Param(0.01, "float", positive),
    },
    "bound_audit": {
        "draws": Param(50, "int", at_least(1)),
        "seed": Param(7, "int", nonnegative),
        "N_max": Param(5, "int", in_range(1, 8)),
        "nonparaxial_fraction": Param(0.5, "float", in_range(0.0, 1.0)),
        "slack": Param(1e-9, "float", nonnegative),
    },
    "rotation_audit": {
        "draws": Param(1000, "int", at_least(1)),
        "seed": Param(11, "int", nonnegative),
        "tolerance": Param(1e-12, "float", positive),
        "na_probe": Param(0.8, "float", in_range(0.0, 0.999)),
        "gamma_expected": Param(1.2910, "float", positive),
        "gamma_tolerance": Param(0.005, "float", positive),
        "curve_na_max": Param(0.95, "float", in_range(0.0, 0.999)),
        "curve_points": Param(191, "int", at_least(2)),
    },
    "absorber_convergence": {
        "N": Param(2, "int", in_range(1, 3)),
        "kappa0": Param(1.0, "float", positive, "momentum"),
        "delta_kappa": Param(0.02, "float", positive, "momentum"),
        "fractions": Param([10, 20, 40], "int_list", nonempty_each(at_least(2))),
        "x_points": Param(9, "int", at_least(1)),
        "nodes_per_dim": Param(16, "int", in_range(2, 64)),
        "ratio_expected": Param(4.0, "float", positive),
        "ratio_tolerance": Param(0.2, "float", positive),
    },
}


def schema_for(kind: str) -> dict[str, Param]:
    return {**COMMON, **SCHEMAS[kind]}


@dataclass
class Scenario:
    kind: str
    parameters: dict
    output_dir: Path
    source: Path | None = None
    overrides: dict = field(default_factory=dict)

    def context(self) -> OpticalContext:
        c = SPEED_OF_LIGHT if self.parameters["units"] == "si" else 1.0
        return OpticalContext.from_wavelength(self.parameters["wavelength"], eta=self.parameters["eta"], c=c)


def parse_text(text: str, fmt: str = "yaml", name: str = "<scenario>") -> Any:
    """Parse scenario text, reporting the 1-based line and column of any syntax error."""
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioParseError(f"{name}: {exc.msg}", exc.lineno, exc.colno) from exc
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ScenarioParseError(f"{name}: {exc.problem or exc}", line, col) from exc
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"{name}: {exc}", None, None) from exc


def _coerce(name: str, p: Param, value, problems: list[str]):
    def bad(msg):
        problems.append(f"parameters.{name}: {msg} (got {value!r})")

    def num(v, integer=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TypeError
        if integer:
            if isinstance(v, float) and not v.is_integer():
                raise TypeError
            return int(v)
        if not math.isfinite(v):
            raise TypeError
        return float(v)

    try:
        if p.type == "int":
            return num(value, True)
        if p.type == "float":
            return num(value)
        if p.type in ("int_list", "float_list"):
            seq = value if isinstance(value, (list, tuple)) else [value]
            return [num(v, p.type == "int_list") for v in seq]
        if p.type == "choice":
            if value not in p.choices:
                bad(f"must be one of {list(p.choices)}")
                return None
            return value
        if p.type == "case_list":
            cases = []
            for case in value:
                if len(case) != 3:
                    raise TypeError
                n, b, beta = num(case[0], True), num(case[1]), num(case[2])
                if n < 2 or b <= 0 or beta <= 0:
                    bad("each case needs N >= 2 and positive B, beta")
                    return None
                cases.append([n, b, beta])
            return cases
    except (TypeError, ValueError):
        expected = {
            "int": "an integer",
            "float": "a finite number",
            "int_list": "a list of integers",
            "float_list": "a list of numbers",
            "case_list": "a list of [N, B, beta] triples",
        }[p.type]
        bad(f"expected {expected}")
        return None
    raise AssertionError(p.type)


def _scale_default(p: Param, wavelength: float):
    if p.dim is None or wavelength == 1.0:
        return p.default
    factor = wavelength if p.dim == "length" else 1.0 / wavelength
    if isinstance(p.default, list):
        return [v * factor for v in p.default]
    return p.default * factor


def _cross_checks(kind: str, prm: dict) -> list[str]:
    out = []
    if kind in ("dangelo_angular", "dangelo_alpha_scan") and prm["b"] <= prm["a"]:
        out.append("parameters.b: slit spacing must exceed slit width a")
    if kind == "noon_compare":
        ratio = prm["kappa0"] / prm["delta_kappa"]
        if ratio < 4:
            out.append("parameters.kappa0: kappa0/delta_kappa must be >= 4 so the two beams are distinct")
        kmax = 2 * math.pi / prm["wavelength"]
        if prm["regime"] == "nonparaxial" and prm["kappa0"] + 9 * prm["delta_kappa"] >= kmax:
            out.append("parameters.kappa0: beam support reaches the light cone in the nonparaxial regime")
        if prm["regime"] == "paraxial" and prm["kappa0"] >= kmax:
            out.append("parameters.kappa0: must stay below omega/c")
    if kind == "absorber_convergence" and prm["kappa0"] / prm["delta_kappa"] < 4:
        out.append("parameters.kappa0: kappa0/delta_kappa must be >= 4")
    if kind == "gaussian_tradeoff" and prm["asymptote_N"] < 2:
        out.append("parameters.asymptote_N: must be >= 2")
    return out


def validate(raw: Any, source: Path | None = None, overrides: dict | None = None) -> Scenario:
    """Check a parsed scenario and fill defaults; every violation is reported at once."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ScenarioValidationError(["scenario must be a mapping with a 'kind' key"])
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            problems.append(f"unknown top-level key {key!r}; allowed: {list(TOP_LEVEL_KEYS)}")
    kind = raw.get("kind")
    if kind not in KINDS:
        problems.append(f"kind: must be one of {list(KINDS)} (got {kind!r})")
        raise ScenarioValidationError(problems)
    given = dict(raw.get("parameters") or {})
    if not isinstance(raw.get("parameters") or {}, dict):
        problems.append("parameters: must be a mapping")
        given = {}
    given.update(overrides or {})
    schema = schema_for(kind)
    for key in given:
        if key not in schema:
            problems.append(f"parameters.{key}: unknown parameter for kind {kind!r}; allowed: {sorted(schema)}")

    values: dict[str, Any] = {}
    for key in ("units", "wavelength", "eta"):
        p = schema[key]
        values[key] = _coerce(key, p, given[key], problems) if key in given else p.default
    wavelength = values["wavelength"] if isinstance(values["wavelength"], float) else 1.0
    for key, p in schema.items():
        if key in values:
            continue
        values[key] = _coerce(key, p, given[key], problems) if key in given else _scale_default(p, wavelength)
    for key, p in schema.items():
        v = values[key]
        if v is None or p.check is None:
            continue
        msg = p.check(v)
        if msg:
            problems.append(f"parameters.{key}: {msg} (got {v!r})")
    if not problems:
        problems.extend(_cross_checks(kind, values))
    out_dir = raw.get("output_dir", f"reports/{kind}")
    if not isinstance(out_dir, str) or not out_dir:
        problems.append("output_dir: must be a non-empty string")
    if problems:
        raise ScenarioValidationError(problems)
    return Scenario(kind, values, Path(out_dir), source, dict(overrides or {}))


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"{path}: {exc.strerror}", None, None) from exc
    fmt = "json" if path.suffix.lower() == ".json" else "yaml"
    raw = parse_text(text, fmt, str(path))
    return validate(raw, path, overrides)


def parse_assignment(text: str) -> tuple[str, Any]:
    """``key=value`` with the value read as a YAML scalar or flow sequence."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ScenarioParseError(f"--set expects key=value, got {text!r}", None, None)
    return key.strip(), parse_text(value, "yaml", f"--set {key.strip()}")
