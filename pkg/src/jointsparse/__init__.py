"""Hierarchical Bayesian MAP estimation for jointly sparse multi-vector recovery."""

__version__ = "0.1.0"

from .inference import AlgorithmSpec, least_squares_baseline, run
from .model import (
    HyperModelConfig,
    MMVProblem,
    RecoveryResult,
    SolverConfig,
    eta,
    validate,
)

__all__ = [
    "AlgorithmSpec",
    "HyperModelConfig",
    "MMVProblem",
    "RecoveryResult",
    "SolverConfig",
    "__version__",
    "eta",
    "least_squares_baseline",
    "run",
    "validate",
]
