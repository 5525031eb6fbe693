"""Objective values, gradients, curvature, and convexity analysis.

The variance-form ("ias") objective over (x_1..x_L, theta > 0) is

    G = 1/2 sum_l ( ||F_l x_l - y_l||^2 + sum_k [R x_l]_k^2 / theta_k )
        + sum_k (theta_k / vartheta_k)^r  -  eta * sum_k log theta_k

with eta = r*beta - (L/2 + 1). The precision-form ("gsbl") objective is

    G = 1/2 sum_l ( ||F_l x_l - y_l||^2 + sum_k theta_k [R x_l]_k^2 )
        + sum_k theta_k / vartheta_k  +  (1 - L/2 - beta) * sum_k log theta_k.

hessian_quadratic_form evaluates u^T (grad^2 G) u for the variance form in
closed form; its sign analysis yields the convexity classification:

* globally convex when r >= 1 and eta > 0;
* convex on the sublevel set theta_k < vartheta_k * (eta / (r |r-1|))^{1/r}
  when 0 < r < 1 with eta > 0, or when r < 0 (eta < 0 automatically);
* not guaranteed otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveTheta, NotApplicable
from .model import (
    VARIANT_GSBL,
    VARIANT_IAS,
    HyperModelConfig,
    MMVProblem,
    eta,
    validate,
)

GLOBALLY_CONVEX = "globally_convex"
CONVEX_AT_THETA = "convex_at_theta"
NOT_GUARANTEED = "not_guaranteed"


@dataclass
class ObjectiveContext:
    """A validated problem/hyper pair with broadcast vartheta and cached eta."""

    problem: MMVProblem
    hyper: HyperModelConfig

    def __post_init__(self):
        validate(self.problem, self.hyper)
        self.vartheta = self.hyper.vartheta_vector(self.problem.K)
        if self.hyper.variant == VARIANT_IAS:
            self.eta = eta(self.hyper.r, self.hyper.beta, self.problem.L)
        else:
            self.eta = None


def _check_theta(theta, K):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (K,):
        raise NonPositiveTheta(f"theta has shape {theta.shape}, expected ({K},)")
    if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
        raise NonPositiveTheta("theta must be positive and finite elementwise")
    return theta


def _residual_energy(ctx, xs):
    total = 0.0
    for F, x, y in zip(ctx.problem.forward_ops, xs, ctx.problem.measurements):
        res = F.apply(x) - y
        total += float(res @ res)
    return total


def _transformed(ctx, xs):
    R = ctx.problem.sparsifier
    return [R.apply(x) for x in xs]


def objective_ias(ctx: ObjectiveContext, xs, theta) -> float:
    theta = _check_theta(theta, ctx.problem.K)
    rx = _transformed(ctx, xs)
    prior = sum(float(np.sum(z**2 / theta)) for z in rx)
    hyper = float(np.sum((theta / ctx.vartheta) ** ctx.hyper.r))
    return (
        0.5 * (_residual_energy(ctx, xs) + prior)
        + hyper
        - ctx.eta * float(np.sum(np.log(theta)))
    )


def objective_gsbl(ctx: ObjectiveContext, xs, theta) -> float:
    theta = _check_theta(theta, ctx.problem.K)
    rx = _transformed(ctx, xs)
    prior = sum(float(np.sum(theta * z**2)) for z in rx)
    L = ctx.problem.L
    coeff = 1.0 - L / 2 - ctx.hyper.beta
    return (
        0.5 * (_residual_energy(ctx, xs) + prior)
        + float(np.sum(theta / ctx.vartheta))
        + coeff * float(np.sum(np.log(theta)))
    )


def gradient_ias(ctx: ObjectiveContext, xs, theta):
    """Gradient of the variance-form objective.

    Returns (grad_x, grad_theta) where grad_x is a list of length-N vectors
    F_l^T (F_l x_l - y_l) + R^T D_theta^{-1} R x_l and grad_theta has
    components -s_k/theta_k^2 + r theta_k^{r-1}/vartheta_k^r - eta/theta_k
    with s_k = sum_l [R x_l]_k^2 / 2.
    """
    theta = _check_theta(theta, ctx.problem.K)
    R = ctx.problem.sparsifier
    rx = _transformed(ctx, xs)
    grad_x = []
    for F, x, y, z in zip(ctx.problem.forward_ops, xs, ctx.problem.measurements, rx):
        grad_x.append(F.adjoint_apply(F.apply(x) - y) + R.adjoint_apply(z / theta))
    s = 0.5 * sum(z**2 for z in rx)
    r = ctx.hyper.r
    grad_theta = (
        -s / theta**2
        + r * theta ** (r - 1) / ctx.vartheta**r
        - ctx.eta / theta
    )
    return grad_x, grad_theta


def gradient_gsbl(ctx: ObjectiveContext, xs, theta):
    """Gradient of the precision-form objective (same layout as gradient_ias)."""
    theta = _check_theta(theta, ctx.problem.K)
    R = ctx.problem.sparsifier
    rx = _transformed(ctx, xs)
    grad_x = []
    for F, x, y, z in zip(ctx.problem.forward_ops, xs, ctx.problem.measurements, rx):
        grad_x.append(F.adjoint_apply(F.apply(x) - y) + R.adjoint_apply(theta * z))
    s = 0.5 * sum(z**2 for z in rx)
    L = ctx.problem.L
    grad_theta = s + 1.0 / ctx.vartheta + (1.0 - L / 2 - ctx.hyper.beta) / theta
    return grad_x, grad_theta


def hessian_quadratic_form(ctx: ObjectiveContext, xs, theta, vs, w) -> float:
    """Evaluate u^T (grad^2 G) u for the variance form at (xs, theta).

    The direction u = (v_1..v_L, w) splits like the variables. The closed form
    groups the curvature into three sums:

        sum_l ||F_l v_l||^2
      + sum_l sum_k (theta_k [R v_l]_k - w_k [R x_l]_k)^2 / theta_k^3
      + sum_k w_k^2 (r (r-1) theta_k^r / vartheta_k^r + eta) / theta_k^2

    The last sum alone is a lower bound for the whole expression.
    """
    theta = _check_theta(theta, ctx.problem.K)
    w = np.asarray(w, dtype=float)
    R = ctx.problem.sparsifier
    total = 0.0
    for F, x, v in zip(ctx.problem.forward_ops, xs, vs):
        fv = F.apply(v)
        total += float(fv @ fv)
        rv = R.apply(v)
        rx = R.apply(x)
        total += float(np.sum((theta * rv - w * rx) ** 2 / theta**3))
    total += curvature_lower_bound(ctx, theta, w)
    return total


def curvature_lower_bound(ctx: ObjectiveContext, theta, w) -> float:
    """The theta-only sum bounding hessian_quadratic_form from below."""
    theta = _check_theta(theta, ctx.problem.K)
    w = np.asarray(w, dtype=float)
    r = ctx.hyper.r
    coeff = r * (r - 1) * theta**r / ctx.vartheta**r + ctx.eta
    return float(np.sum(w**2 * coeff / theta**2))


def convexity_check(hyper: HyperModelConfig, L: int, theta) -> str:
    """Classify convexity of the variance-form objective at a given theta.

    The global branch ignores theta. The conditional branch tests the
    componentwise curvature condition r (r-1) (theta_k/vartheta_k)^r > -eta.
    """
    r = hyper.r
    e = eta(r, hyper.beta, L)
    if r >= 1 and e > 0:
        return GLOBALLY_CONVEX
    if (0 < r < 1 and e > 0) or r < 0:
        theta = _check_theta(theta, np.asarray(theta).shape[0])
        vartheta = hyper.vartheta_vector(theta.shape[0])
        cond = r * (r - 1) * (theta / vartheta) ** r > -e
        return CONVEX_AT_THETA if bool(np.all(cond)) else NOT_GUARANTEED
    return NOT_GUARANTEED


def convexity_threshold(hyper: HyperModelConfig, L: int, K: int = 1) -> np.ndarray:
    """Componentwise theta bound below which the conditional branch is convex.

    Equals vartheta_k * (eta / (r |r - 1|))^(1/r) for 0 < r < 1 with eta > 0
    and for r < 0. Raises NotApplicable in the globally convex case (r >= 1)
    and whenever neither convexity case applies.
    """
    r = hyper.r
    e = eta(r, hyper.beta, L)
    if not ((0 < r < 1 and e > 0) or r < 0):
        raise NotApplicable(
            f"no finite theta threshold for r={r}, eta={e}; the objective is "
            "either globally convex or outside both convexity regimes"
        )
    vartheta = hyper.vartheta_vector(K)
    return vartheta * (e / (r * abs(r - 1))) ** (1.0 / r)
