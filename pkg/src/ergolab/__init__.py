"""Desk-scale computations for spectral ergodic theory of group actions."""

__version__ = "0.1.0"

from .errors import ErgolabError, InvalidInput, NumericalFailure, SizeCapExceeded

__all__ = [
    "__version__",
    "ErgolabError",
    "InvalidInput",
    "NumericalFailure",
    "SizeCapExceeded",
]
