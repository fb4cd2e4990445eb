"""Eigenvalue statistics of 1D Schroedinger operators with decaying random potentials.

Modules: ``amplitudes`` (random and dynamically generated cell amplitudes),
``dynsys`` (symbolic dynamics behind the dependent amplitudes),
``potential`` (the alloy-type potential), ``prufer`` (phase integration),
``spectrum`` (Sturm-oscillation eigenvalues and the rescaled point process),
``stats`` (Monte Carlo experiments) and ``cli``.
"""

from .errors import (ClockspecError, ConfigError, DomainError, NumericError,
                     PrecisionExhausted, RootFindingError)
from .potential import Bump, Indicator, PotentialModel, Table
from .prufer import IntegratorConfig, PhaseFunction, integrate_phase
from .spectrum import eigenvalue_window, locate_eigenvalue, oscillation_count, relative_phase

__version__ = "0.1.0"

__all__ = [
    "ClockspecError", "ConfigError", "DomainError", "NumericError", "PrecisionExhausted",
    "RootFindingError", "Bump", "Indicator", "PotentialModel", "Table", "IntegratorConfig",
    "PhaseFunction", "integrate_phase", "eigenvalue_window", "locate_eigenvalue",
    "oscillation_count", "relative_phase",
]
