"""Multiphoton absorption patterns of quantized 2D monochromatic fields."""

from .errors import (
    CapabilityError,
    ConstructionError,
    ConvergenceError,
    DomainError,
    QlithoError,
    ResolutionError,
    ScenarioError,
    ScenarioParseError,
    ScenarioValidationError,
)
from .field_core import OpticalContext, geometric_factor, rotate_mode, schwarz_bound_density
from .gaussian_tradeoff import GaussianParams
from .states import ModeSpectrum, make_classical, make_jointly_gaussian, make_noon

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ConstructionError",
    "ConvergenceError",
    "DomainError",
    "GaussianParams",
    "ModeSpectrum",
    "OpticalContext",
    "QlithoError",
    "ResolutionError",
    "ScenarioError",
    "ScenarioParseError",
    "ScenarioValidationError",
    "geometric_factor",
    "make_classical",
    "make_jointly_gaussian",
    "make_noon",
    "rotate_mode",
    "schwarz_bound_density",
]
