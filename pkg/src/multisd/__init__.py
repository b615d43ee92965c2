"""Numerics for multiply selfdecomposable laws.

Euler-Mellin operator calculus, kernel and Gamma-ratio functions of the
Gamma factorization, SD_n classification of Levy triplets and Monte Carlo
checks of the underlying distributional identities.
"""
from .errors import (BracketError, ConvergenceError, DivergenceError, DomainError, InconclusiveError,
                     OrderError, QuadratureError, RegimeError)
from .kernels import AlphaWeights, KernelParams
from .numerics import GridSpec, QuadResult
from .theta import MnCertificate, ScalarFunction

__version__ = "0.1.0"

__all__ = [
    "AlphaWeights", "BracketError", "ConvergenceError", "DivergenceError", "DomainError", "GridSpec",
    "InconclusiveError", "KernelParams", "MnCertificate", "OrderError", "QuadResult", "QuadratureError",
    "RegimeError", "ScalarFunction",
]
