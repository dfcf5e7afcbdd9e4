"""hypspec: exact hyperbolic spectral kernels, 0-geodesic flow, bound checks."""

from . import flow, hypgeo, kernels, transform, verify
from .errors import (
    ContractError,
    ConvergenceError,
    DomainError,
    IntegrationError,
    ResolutionError,
    TruncationError,
    UnsupportedOrderError,
)

__version__ = "0.1.0"

__all__ = [
    "flow",
    "hypgeo",
    "kernels",
    "transform",
    "verify",
    "ContractError",
    "ConvergenceError",
    "DomainError",
    "IntegrationError",
    "ResolutionError",
    "TruncationError",
    "UnsupportedOrderError",
    "__version__",
]
