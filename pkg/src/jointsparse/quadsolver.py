"""Weighted least-squares subproblem solvers.

Each signal update minimizes ||F x - y||^2 + ||W^{1/2} R x||^2 over x, i.e.
solves the normal equations (F^T F + R^T W R) x = F^T y for a diagonal weight
matrix W. The system matrix is positive definite whenever ker(F) and ker(R)
intersect trivially and all weights are positive.

Two execution paths:

* direct: densify the normal matrix, Cholesky-factor it, and apply one step
  of iterative refinement. Default for N <= 512.
* pcg: matrix-free preconditioned conjugate gradients with a Jacobi
  preconditioner assembled from exact or surrogate column norms.

SubproblemSolver caches whatever is reusable across repeated solves with
changing weights (the F-gram and right-hand side on the direct path, operator
closures and sparsifier column data on the PCG path).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import NonFiniteValue, SingularSystem
from .model import SolverConfig
from .operators import SparseMap

log = logging.getLogger(__name__)


@dataclass
class QuadraticSubproblem:
    """One weighted update: forward F, data y, sparsifier R, weights w > 0."""

    forward: object
    data: np.ndarray
    sparsifier: object
    weights: np.ndarray


def pcg(apply_A, b, precond=None, tol=1e-8, maxit=1000, x0=None):
    """Preconditioned conjugate gradients on an SPD operator action.

    precond is the diagonal of a Jacobi preconditioner (None for identity).
    Stops when ||b - A x|| <= tol * ||b|| (absolute when b = 0). Returns
    (x, iterations, relative_residual); callers must treat a result with
    relative_residual > tol as a budget overrun, not silently trust it.
    """
    b = np.asarray(b, dtype=float)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros_like(b), 0, 0.0
    if precond is None:
        inv_m = np.ones_like(b)
    else:
        inv_m = 1.0 / np.asarray(precond, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x) if x.any() else b.copy()
    z = inv_m * r
    p = z.copy()
    rz = float(r @ z)
    res = np.linalg.norm(r)
    it = 0
    while res > tol * norm_b and it < maxit:
        ap = apply_A(p)
        denom = float(p @ ap)
        if not np.isfinite(denom) or denom <= 0:
            raise NonFiniteValue(f"pcg breakdown: curvature {denom} along search direction")
        alpha = rz / denom
        x += alpha * p
        r -= alpha * ap
        res = np.linalg.norm(r)
        z = inv_m * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
        if not np.isfinite(res):
            raise NonFiniteValue("pcg produced a non-finite residual")
    return x, it, res / norm_b


def _sparsifier_matrix(R):
    if isinstance(R, SparseMap):
        return R.matrix
    return scipy.sparse.csr_matrix(R.to_dense())


class SubproblemSolver:
    """Repeated weighted solves for one (F, y, R) triple with changing weights."""

    def __init__(self, forward, data, sparsifier, cfg: SolverConfig = None):
        self.cfg = cfg or SolverConfig()
        self.forward = forward
        self.data = np.asarray(data, dtype=float)
        self.sparsifier = sparsifier
        self.rhs = forward.adjoint_apply(self.data)
        self.N = forward.cols
        self.direct = self.cfg.wants_direct(self.N)
        self.R = _sparsifier_matrix(sparsifier)
        if self.direct:
            Fd = forward.to_dense()
            self.gram = Fd.T @ Fd
        else:
            self.gram_diag = forward.gram_diagonal()
            self.R_sq = self.R.multiply(self.R).tocsr()

    def _normal_matrix(self, weights):
        prior = (self.R.T.multiply(weights) @ self.R).toarray()
        return self.gram + prior

    def solve(self, weights, x0=None):
        weights = np.asarray(weights, dtype=float)
        if self.direct:
            A = self._normal_matrix(weights)
            try:
                cf = scipy.linalg.cho_factor(A, check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise SingularSystem(
                    f"normal equations are not positive definite ({exc}); "
                    "check the common-kernel condition and the weights"
                )
            x = scipy.linalg.cho_solve(cf, self.rhs, check_finite=False)
            # One refinement step keeps the residual near machine level even
            # for ill-conditioned forward maps.
            resid = self.rhs - A @ x
            x += scipy.linalg.cho_solve(cf, resid, check_finite=False)
            return x

        def apply_A(v):
            fv = self.forward.adjoint_apply(self.forward.apply(v))
            rv = self.R.T @ (weights * (self.R @ v))
            return fv + rv

        diag = self.gram_diag + self.R_sq.T @ weights
        diag = np.where(diag > 0, diag, 1.0)
        x, iters, rel = pcg(
            apply_A,
            self.rhs,
            precond=diag,
            tol=self.cfg.inner_tol,
            maxit=self.cfg.inner_maxit,
            x0=x0,
        )
        if rel > self.cfg.inner_tol:
            log.warning(
                "pcg stopped after %d iterations at relative residual %.3e "
                "(budget %d, tol %.1e)",
                iters, rel, self.cfg.inner_maxit, self.cfg.inner_tol,
            )
        return x


def solve_quadratic(sub: QuadraticSubproblem, cfg: SolverConfig = None) -> np.ndarray:
    """Solve one weighted subproblem from scratch (no caching across calls)."""
    solver = SubproblemSolver(sub.forward, sub.data, sub.sparsifier, cfg)
    return solver.solve(sub.weights)


def check_common_kernel(forward, sparsifier) -> bool:
    """True iff ker(F) and ker(R) intersect only at zero.

    Densifies the stacked operator, so use it at analysis scale only. Rank is
    counted from singular values above N * eps * sigma_max.
    """
    stacked = np.vstack([forward.to_dense(), sparsifier.to_dense()])
    sv = scipy.linalg.svdvals(stacked)
    n = forward.cols
    if sv.size < n or sv[0] == 0.0:
        return False
    return bool(sv[n - 1] > n * np.finfo(float).eps * sv[0])
