"""Spatial random permutations: exact Fourier-side computations, Metropolis
sampling of permutation cycles, and thermodynamic quantities of the
Feynman-Kac representation of the Bose gas and its 2-cycle toy interaction.
"""

from .errors import (
    DomainError,
    PeriodizationError,
    PositivityError,
    ResourceCapError,
    SpatialPermError,
    UnsupportedExactError,
)
from .model_weights import DispersionModel, Kind, check_fourier_positivity, epsilon, make_model

__version__ = "0.1.0"

__all__ = [
    "DispersionModel",
    "Kind",
    "make_model",
    "epsilon",
    "check_fourier_positivity",
    "SpatialPermError",
    "DomainError",
    "PositivityError",
    "UnsupportedExactError",
    "ResourceCapError",
    "PeriodizationError",
    "__version__",
]
