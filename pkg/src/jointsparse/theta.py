"""Hyper-parameter updates for the alternating MAP solvers.

For fixed signals, the objective decouples across components k. Writing
s_k = sum_l [R x_l]_k^2 / 2, the variance-form stationarity condition is

    0 = -s_k / theta_k^2 + r theta_k^{r-1} / vartheta_k^r - eta / theta_k,

equivalently phi(theta) = (r / vartheta^r) theta^{r+1} - eta*theta - s = 0.
Closed forms exist for r = 1 (requires eta > 0) and r = -1 (requires eta < 0,
which the sign of eta = r*beta - (L/2+1) guarantees); general r goes through
a bracketed root solve. For every valid sign configuration (r > 0 with
eta > 0, or r < 0) phi has exactly one positive root, which is the minimizer
of the scalar objective f(theta) = s/theta + (theta/vartheta)^r - eta*log(theta).

The precision form has the single closed form
theta_k = (L/2 - 1 + beta) / (s_k + 1/vartheta_k).
"""
from __future__ import annotations

import numpy as np
import scipy.optimize

from .errors import InvalidEta, InvalidShape, NoPositiveRoot
from .model import VARIANT_IAS, HyperModelConfig, eta


def sparsity_moment(sparsifier, xs) -> np.ndarray:
    """s_k = sum_l [R x_l]_k^2 / 2, the per-component signal energy."""
    s = np.zeros(sparsifier.rows)
    for x in xs:
        z = sparsifier.apply(x)
        s += z**2
    return 0.5 * s


def _validate_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise InvalidShape("sparsity moments must be finite and nonnegative")
    return s


def theta_update_ias(s, hyper: HyperModelConfig, L: int) -> np.ndarray:
    """Componentwise minimizer of the variance-form objective in theta.

    Uses the closed forms for r = +-1 and the numeric stationarity solve
    otherwise. Output is strictly positive.
    """
    s = _validate_s(s)
    vartheta = hyper.vartheta_vector(s.shape[0])
    r = hyper.r
    e = eta(r, hyper.beta, L)
    if r == 1:
        if e <= 0:
            raise InvalidEta(f"r=1 update needs eta > 0, got eta={e}")
        return 0.5 * vartheta * (e + np.sqrt(e**2 + 4 * s / vartheta))
    if r == -1:
        if e >= 0:
            raise InvalidEta(f"r=-1 update needs eta < 0, got eta={e}")
        return (s + vartheta) / (-e)
    return np.array(
        [solve_stationarity(sk, r, vk, e) for sk, vk in zip(s, vartheta)]
    )


def theta_update_gsbl(s, beta: float, vartheta, L: int) -> np.ndarray:
    """theta_k = (L/2 - 1 + beta) / (s_k + 1/vartheta_k), requires L/2-1+beta > 0."""
    s = _validate_s(s)
    vartheta = np.broadcast_to(np.asarray(vartheta, dtype=float), s.shape)
    num = L / 2 - 1 + beta
    if num <= 0:
        raise InvalidShape(f"gsbl update needs L/2 - 1 + beta > 0, got {num}")
    if np.any(vartheta <= 0):
        raise InvalidShape("vartheta must be positive")
    return num / (s + 1.0 / vartheta)


def _phi(theta, s, r, vartheta, e):
    return (r / vartheta**r) * theta ** (r + 1) - e * theta - s


def solve_stationarity(s, r, vartheta, e) -> float:
    """Positive root of the componentwise stationarity equation, any nonzero r.

    Brackets the root geometrically and hands the interval to a guarded
    Brent solve. Raises NoPositiveRoot when the sign configuration admits
    none (e.g. r > 0 with eta <= 0 and s = 0).
    """
    if r == 0:
        raise InvalidShape("shape exponent r must be nonzero")
    if s < 0 or vartheta <= 0:
        raise InvalidShape("need s >= 0 and vartheta > 0")
    if s == 0.0:
        # phi(theta) = theta * ((r/vartheta^r) theta^r - eta): positive root
        # iff eta/r > 0, i.e. the sign-matched regimes.
        if e / r <= 0:
            raise NoPositiveRoot(
                f"no positive stationary point for r={r}, eta={e}, s=0"
            )
        return float(vartheta * (e / r) ** (1.0 / r))

    hi = float(vartheta)
    for _ in range(2000):
        if _phi(hi, s, r, vartheta, e) > 0:
            break
        hi *= 2.0
    else:
        raise NoPositiveRoot(f"failed to bracket a root above for r={r}, eta={e}")
    lo = hi / 2.0
    for _ in range(2000):
        if _phi(lo, s, r, vartheta, e) < 0:
            break
        lo /= 2.0
        if lo < 1e-300:
            raise NoPositiveRoot(f"failed to bracket a root below for r={r}, eta={e}")
    root = scipy.optimize.brentq(
        _phi, lo, hi, args=(s, r, vartheta, e), xtol=1e-300, rtol=8.9e-16, maxiter=200
    )
    if root <= 0 or not np.isfinite(root):
        raise NoPositiveRoot(f"root solve returned {root}")
    return float(root)


def stationarity_residual_ias(theta, s, r, vartheta, e):
    """Residual -s/theta^2 + r theta^{r-1}/vartheta^r - eta/theta (vectorized)."""
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    return -s / theta**2 + r * theta ** (r - 1) / np.asarray(vartheta, float) ** r - e / theta


def theta_gradient_gsbl(theta, s, beta, vartheta, L):
    """Partial derivatives of the precision-form objective in theta."""
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    return s + 1.0 / np.asarray(vartheta, float) + (1.0 - L / 2 - beta) / theta


def scalar_objective_ias(theta, s, r, vartheta, e):
    """f(theta) = s/theta + (theta/vartheta)^r - eta log theta (for oracles)."""
    theta = np.asarray(theta, dtype=float)
    return s / theta + (theta / vartheta) ** r - e * np.log(theta)
