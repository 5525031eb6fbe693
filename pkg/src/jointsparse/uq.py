"""Conditional-posterior uncertainty quantification.

With theta frozen at its estimate, each signal's conditional posterior is
Gaussian with precision P = F^T F + R^T W R (W = diag(1/theta) for the
variance form, diag(theta) for the precision form) and mean P^{-1} F^T y.
Sampling goes through the upper Cholesky factor U of P: solving U z = xi for
standard-normal xi yields z with covariance P^{-1}.

Dense factorizations only; the dimension guard keeps this at analysis scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DimensionMismatch, NotPositiveDefinite
from .model import VARIANT_GSBL, VARIANT_IAS
from .operators import SparseMap

MAX_DENSE_DIM = 4096


@dataclass
class ConditionalPosterior:
    """Gaussian posterior for one signal: mean, precision, and its factor."""

    mean: np.ndarray
    precision: np.ndarray
    chol_upper: np.ndarray = field(repr=False, default=None)

    @property
    def covariance(self):
        inv_u = scipy.linalg.solve_triangular(
            self.chol_upper, np.eye(self.mean.shape[0])
        )
        return inv_u @ inv_u.T


def conditional_posterior(forward, data, sparsifier, theta, variant=VARIANT_IAS):
    """Build the Gaussian conditional posterior for one measurement vector."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise NotPositiveDefinite("theta must be positive to define the posterior")
    N = forward.cols
    if N > MAX_DENSE_DIM:
        raise DimensionMismatch(
            f"dense posterior factorization capped at N={MAX_DENSE_DIM}, got {N}"
        )
    if variant == VARIANT_IAS:
        weights = 1.0 / theta
    elif variant == VARIANT_GSBL:
        weights = theta
    else:
        raise NotPositiveDefinite(f"unknown variant {variant!r}")
    Fd = forward.to_dense()
    if isinstance(sparsifier, SparseMap):
        R = sparsifier.matrix
        prior = (R.T.multiply(weights) @ R).toarray()
    else:
        Rd = sparsifier.to_dense()
        prior = (Rd.T * weights) @ Rd
    precision = Fd.T @ Fd + prior
    try:
        upper = scipy.linalg.cholesky(precision, lower=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"posterior precision is not SPD: {exc}")
    rhs = forward.adjoint_apply(np.asarray(data, dtype=float))
    mean = scipy.linalg.cho_solve((upper, False), rhs)
    return ConditionalPosterior(mean=mean, precision=precision, chol_upper=upper)


def sample_posterior(post: ConditionalPosterior, n_samples: int, seed=0):
    """Draw n_samples rows from N(mean, precision^{-1}), reproducibly."""
    rng = np.random.default_rng(seed)
    N = post.mean.shape[0]
    xi = rng.standard_normal((N, n_samples))
    z = scipy.linalg.solve_triangular(post.chol_upper, xi, lower=False)
    return post.mean[np.newaxis, :] + z.T


def credible_intervals(samples, level: float):
    """Componentwise equal-tailed interval bounds (lo, hi) at the given level."""
    samples = np.asarray(samples, dtype=float)
    if not 0 < level < 1:
        raise DimensionMismatch(f"level must lie in (0, 1), got {level}")
    alpha = (1.0 - level) / 2.0
    lo = np.quantile(samples, alpha, axis=0)
    hi = np.quantile(samples, 1.0 - alpha, axis=0)
    return lo, hi
