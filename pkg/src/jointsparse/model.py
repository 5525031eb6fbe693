"""Problem and configuration containers for multi-vector sparse recovery.

The data model: L measurement vectors y_l = F_l x_l + e_l share a sparsifying
transform R, and the transformed signals R x_1, ..., R x_L are jointly sparse
(common support). A gamma-type hyper-prior with parameters (r, beta, vartheta)
controls the per-component variances theta_k. Two estimation variants are
supported:

* "ias": theta parameterizes prior covariances, weights are 1/theta.
* "gsbl": theta parameterizes prior precisions, weights are theta.

Coupling "joint" shares one theta across all L signals; "separate" runs each
signal on its own (equivalent to L independent single-vector problems).

All containers are plain dataclasses. Treat them as immutable after
construction; solvers never mutate them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidHyperParameter

log = logging.getLogger(__name__)

VARIANT_IAS = "ias"
VARIANT_GSBL = "gsbl"
COUPLING_JOINT = "joint"
COUPLING_SEPARATE = "separate"


def eta(r: float, beta: float, L: int) -> float:
    """Coupling constant of the variance-form objective: r*beta - (L/2 + 1)."""
    return r * beta - (L / 2 + 1)


@dataclass
class MMVProblem:
    """L forward operators, their measurements, and a shared sparsifier.

    forward_ops[l] maps R^N -> R^{M_l}; measurements[l] has length M_l;
    sparsifier maps R^N -> R^K. noise_cov, when present, holds one M_l x M_l
    covariance per measurement vector; call operators.whiten_problem before
    inference to reduce to identity covariance.
    """

    forward_ops: Sequence
    measurements: Sequence[np.ndarray]
    sparsifier: object
    noise_cov: Optional[Sequence[np.ndarray]] = None

    def __post_init__(self):
        self.forward_ops = list(self.forward_ops)
        self.measurements = [np.asarray(y, dtype=float) for y in self.measurements]

    @property
    def L(self) -> int:
        return len(self.forward_ops)

    @property
    def N(self) -> int:
        return self.forward_ops[0].cols

    @property
    def K(self) -> int:
        return self.sparsifier.rows


@dataclass
class HyperModelConfig:
    """Hyper-prior parameters and the estimation variant/coupling choice.

    r is the generalized-gamma shape exponent (ias only; must be nonzero).
    vartheta may be a scalar (broadcast to all K components) or a length-K
    vector. beta must be positive.
    """

    variant: str = VARIANT_IAS
    coupling: str = COUPLING_JOINT
    r: Optional[float] = None
    beta: float = 1.0
    vartheta: object = 1.0

    def vartheta_vector(self, K: int) -> np.ndarray:
        v = np.asarray(self.vartheta, dtype=float)
        if v.ndim == 0:
            return np.full(K, float(v))
        if v.shape != (K,):
            raise DimensionMismatch(
                f"vartheta has shape {v.shape}, expected scalar or ({K},)"
            )
        return v

    def eta_for(self, L: int) -> float:
        if self.variant != VARIANT_IAS:
            raise InvalidHyperParameter("eta is defined for the ias variant only")
        return eta(self.r, self.beta, L)


@dataclass
class SolverConfig:
    """Tolerances and iteration budgets for the alternating solver.

    inner_solver: "auto" picks a dense direct factorization when N <= 512 and
    preconditioned CG otherwise; "direct"/"pcg" force one path.
    """

    inner_solver: str = "auto"
    inner_tol: float = 1e-8
    inner_maxit: int = 1000
    outer_maxit: int = 200
    convergence_tol: float = 1e-4
    seed: int = 0

    DIRECT_MAX_N = 512

    def wants_direct(self, N: int) -> bool:
        if self.inner_solver == "direct":
            return True
        if self.inner_solver == "pcg":
            return False
        if self.inner_solver == "auto":
            return N <= self.DIRECT_MAX_N
        raise InvalidHyperParameter(
            f"unknown inner_solver {self.inner_solver!r} (use auto, direct, or pcg)"
        )


@dataclass
class IterationState:
    """Snapshot of the alternating iteration (internal bookkeeping)."""

    x: list
    theta: np.ndarray
    iteration: int
    objective_trace: list = field(default_factory=list)


@dataclass
class RecoveryResult:
    """Output of a full solver run.

    theta_hat is a length-K vector for joint coupling and an (L, K) stack for
    separate coupling. objective_trace holds one objective value per outer
    iteration (for separate coupling: the sum over the per-signal runs, padded
    with each run's final value, which is again non-increasing).
    """

    x_hat: list
    theta_hat: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    wall_time: float


def validate(problem: MMVProblem, hyper: HyperModelConfig) -> None:
    """Check shape compatibility and hyper-parameter sign constraints.

    Raises DimensionMismatch or InvalidHyperParameter. The eta sign rules use
    the effective number of coupled vectors: L for joint coupling, 1 for
    separate coupling.
    """
    if problem.L < 1:
        raise DimensionMismatch("problem needs at least one measurement vector")
    N = problem.N
    for l, (F, y) in enumerate(zip(problem.forward_ops, problem.measurements)):
        if F.cols != N:
            raise DimensionMismatch(
                f"forward operator {l} has {F.cols} columns, expected {N}"
            )
        if y.shape != (F.rows,):
            raise DimensionMismatch(
                f"measurement {l} has length {y.shape}, operator has {F.rows} rows"
            )
    if problem.sparsifier.cols != N:
        raise DimensionMismatch(
            f"sparsifier has {problem.sparsifier.cols} columns, expected {N}"
        )
    if problem.noise_cov is not None:
        if len(problem.noise_cov) != problem.L:
            raise DimensionMismatch("need one noise covariance per measurement vector")
        for l, (F, C) in enumerate(zip(problem.forward_ops, problem.noise_cov)):
            C = np.asarray(C)
            if C.shape != (F.rows, F.rows):
                raise DimensionMismatch(
                    f"noise covariance {l} has shape {C.shape}, expected "
                    f"({F.rows}, {F.rows})"
                )

    if hyper.variant not in (VARIANT_IAS, VARIANT_GSBL):
        raise InvalidHyperParameter(f"unknown variant {hyper.variant!r}")
    if hyper.coupling not in (COUPLING_JOINT, COUPLING_SEPARATE):
        raise InvalidHyperParameter(f"unknown coupling {hyper.coupling!r}")
    if hyper.beta <= 0:
        raise InvalidHyperParameter(f"beta must be positive, got {hyper.beta}")
    v = hyper.vartheta_vector(problem.K)
    if np.any(v <= 0):
        raise InvalidHyperParameter("vartheta must be positive elementwise")

    L_eff = problem.L if hyper.coupling == COUPLING_JOINT else 1
    if hyper.variant == VARIANT_IAS:
        if hyper.r is None or hyper.r == 0:
            raise InvalidHyperParameter("ias requires a nonzero shape exponent r")
        e = eta(hyper.r, hyper.beta, L_eff)
        if hyper.r > 0 and e <= 0:
            raise InvalidHyperParameter(
                f"r={hyper.r}, beta={hyper.beta}, L={L_eff} gives eta={e} <= 0; "
                "positive r requires eta > 0 for a positive hyper-parameter update"
            )
        # r < 0 forces eta = r*beta - (L/2 + 1) < 0, which is the valid sign.
    else:
        if hyper.r is not None:
            log.warning("gsbl ignores the shape exponent r=%s", hyper.r)
        if L_eff / 2 - 1 + hyper.beta <= 0:
            raise InvalidHyperParameter(
                f"gsbl needs L/2 - 1 + beta > 0, got {L_eff / 2 - 1 + hyper.beta} "
                f"(L={L_eff}, beta={hyper.beta})"
            )
