import numpy as np
import pytest

from jointsparse.errors import NonPositiveTheta, NotApplicable
from jointsparse.model import HyperModelConfig, MMVProblem
from jointsparse.objective import (
    CONVEX_AT_THETA,
    GLOBALLY_CONVEX,
    NOT_GUARANTEED,
    ObjectiveContext,
    convexity_check,
    convexity_threshold,
    curvature_lower_bound,
    gradient_gsbl,
    gradient_ias,
    hessian_quadratic_form,
    objective_gsbl,
    objective_ias,
)
from jointsparse.operators import DenseMap, difference_operator, identity_operator


def make_ctx(N=5, M=4, K=None, L=2, variant="ias", r=-1.0, beta=1.0, vartheta=1.0,
             seed=0, sparsifier="diff"):
    rng = np.random.default_rng(seed)
    if sparsifier == "diff":
        R = difference_operator(N)
    else:
        R = identity_operator(N)
    ops = [DenseMap(rng.standard_normal((M, N))) for _ in range(L)]
    ys = [rng.standard_normal(M) for _ in range(L)]
    problem = MMVProblem(ops, ys, R)
    hyper = HyperModelConfig(variant=variant, coupling="joint",
                             r=None if variant == "gsbl" else r,
                             beta=beta, vartheta=vartheta)
    return ObjectiveContext(problem, hyper)


def test_variance_form_value_trivial_point():
    # x = 0, y = 0, theta = vartheta = 1: residual and prior vanish,
    # power term is K, log term is zero.
    problem = MMVProblem([DenseMap(np.eye(1))], [np.zeros(1)], identity_operator(1))
    hyper = HyperModelConfig(variant="ias", r=1.0, beta=3.0)
    ctx = ObjectiveContext(problem, hyper)
    assert objective_ias(ctx, [np.zeros(1)], np.ones(1)) == pytest.approx(1.0, abs=1e-15)


def test_variance_form_value_by_hand():
    # F = [[2]], y = [1], x = [2], R = I, theta = 2, vartheta = 1, r = 1.
    problem = MMVProblem([DenseMap(np.array([[2.0]]))], [np.ones(1)],
                         identity_operator(1))
    hyper = HyperModelConfig(variant="ias", r=1.0, beta=3.0)  # eta = 1.5
    ctx = ObjectiveContext(problem, hyper)
    got = objective_ias(ctx, [np.array([2.0])], np.array([2.0]))
    expected = 0.5 * (9.0 + 4.0 / 2.0) + 2.0 - 1.5 * np.log(2.0)
    assert got == pytest.approx(expected, rel=1e-15)


def test_precision_form_value_trivial_point():
    K = 6
    problem = MMVProblem([DenseMap(np.eye(K))], [np.zeros(K)], identity_operator(K))
    hyper = HyperModelConfig(variant="gsbl", beta=2.0)
    ctx = ObjectiveContext(problem, hyper)
    assert objective_gsbl(ctx, [np.zeros(K)], np.ones(K)) == pytest.approx(K, abs=1e-13)


def pack(xs, theta):
    return np.concatenate([np.concatenate(xs), theta])


def unpack(z, N, L, K):
    xs = [z[l * N : (l + 1) * N] for l in range(L)]
    return xs, z[L * N :]


@pytest.mark.parametrize("variant,r,beta", [
    ("ias", -1.0, 1.0),
    ("ias", 1.0, 4.0),
    ("ias", 0.5, 8.0),
    ("gsbl", None, 1.5),
])
def test_gradients_match_central_differences(variant, r, beta):
    N, M, L = 5, 4, 2
    ctx = make_ctx(N=N, M=M, L=L, variant=variant, r=r, beta=beta, seed=3)
    K = ctx.problem.K
    fun = objective_ias if variant == "ias" else objective_gsbl
    grad = gradient_ias if variant == "ias" else gradient_gsbl

    def f(z):
        xs, theta = unpack(z, N, L, K)
        return fun(ctx, xs, theta)

    rng = np.random.default_rng(11)
    for _ in range(20):
        xs = [rng.standard_normal(N) for _ in range(L)]
        theta = np.exp(rng.uniform(-1, 1, K))
        gx, gt = grad(ctx, xs, theta)
        z = pack(xs, theta)
        g = np.concatenate([np.concatenate(gx), gt])
        for i in range(z.size):
            h = 1e-6 * (1.0 + abs(z[i]))
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            fd = (f(zp) - f(zm)) / (2 * h)
            assert abs(fd - g[i]) < 1e-5 * (1.0 + abs(g[i]))


def test_quadratic_form_matches_second_differences():
    N, M, L = 4, 3, 2
    ctx = make_ctx(N=N, M=M, L=L, variant="ias", r=-1.0, beta=1.5, seed=7)
    K = ctx.problem.K

    def f(z):
        xs, theta = unpack(z, N, L, K)
        return objective_ias(ctx, xs, theta)

    rng = np.random.default_rng(13)
    for _ in range(15):
        xs = [rng.standard_normal(N) for _ in range(L)]
        theta = np.exp(rng.uniform(-0.5, 0.5, K))
        vs = [rng.standard_normal(N) for _ in range(L)]
        w = rng.standard_normal(K)
        qf = hessian_quadratic_form(ctx, xs, theta, vs, w)
        z = pack(xs, theta)
        u = pack(vs, w)
        h = 1e-4
        fd = (f(z + h * u) - 2 * f(z) + f(z - h * u)) / h**2
        assert abs(fd - qf) < 1e-5 * (1.0 + abs(qf))


def test_quadratic_form_dominates_lower_bound():
    ctx = make_ctx(N=6, M=5, L=2, variant="ias", r=0.5, beta=8.0, seed=9)
    K = ctx.problem.K
    rng = np.random.default_rng(17)
    for _ in range(50):
        xs = [rng.standard_normal(6) for _ in range(2)]
        theta = np.exp(rng.uniform(-2, 2, K))
        vs = [rng.standard_normal(6) for _ in range(2)]
        w = rng.standard_normal(K)
        qf = hessian_quadratic_form(ctx, xs, theta, vs, w)
        lb = curvature_lower_bound(ctx, theta, w)
        assert qf >= lb - 1e-10 * (1.0 + abs(qf))


def test_quadratic_form_reduces_to_bound_at_zero_signal():
    ctx = make_ctx(N=5, M=4, L=2, variant="ias", r=-1.0, beta=1.0, seed=21)
    K = ctx.problem.K
    theta = np.full(K, 0.3)
    w = np.arange(1.0, K + 1)
    zeros = [np.zeros(5) for _ in range(2)]
    qf = hessian_quadratic_form(ctx, zeros, theta, zeros, w)
    assert qf == pytest.approx(curvature_lower_bound(ctx, theta, w), rel=1e-14)


def test_globally_convex_classification():
    hyper = HyperModelConfig(variant="ias", r=1.0, beta=4.0)
    assert convexity_check(hyper, 2, np.ones(3)) == GLOBALLY_CONVEX
    with pytest.raises(NotApplicable):
        convexity_threshold(hyper, 2)


def test_conditional_convexity_negative_exponent():
    # r = -1, beta = 1, L = 4: eta = -4, threshold = vartheta / 2.
    hyper = HyperModelConfig(variant="ias", r=-1.0, beta=1.0, vartheta=1e-4)
    t = convexity_threshold(hyper, 4, K=3)
    np.testing.assert_allclose(t, 5e-5, rtol=1e-14)
    below = np.full(3, 4.9e-5)
    above = np.full(3, 5.1e-5)
    assert convexity_check(hyper, 4, below) == CONVEX_AT_THETA
    assert convexity_check(hyper, 4, above) == NOT_GUARANTEED
    mixed = np.array([4e-5, 4e-5, 6e-5])
    assert convexity_check(hyper, 4, mixed) == NOT_GUARANTEED


def test_conditional_convexity_fractional_exponent():
    # r = 1/2, beta = 8, L = 2: eta = 2, threshold = vartheta * (2 / 0.25)^2.
    hyper = HyperModelConfig(variant="ias", r=0.5, beta=8.0, vartheta=2.0)
    t = convexity_threshold(hyper, 2)
    np.testing.assert_allclose(t, 2.0 * 64.0, rtol=1e-13)
    assert convexity_check(hyper, 2, np.array([100.0])) == CONVEX_AT_THETA
    assert convexity_check(hyper, 2, np.array([200.0])) == NOT_GUARANTEED


def test_small_eta_fractional_exponent_never_guaranteed():
    hyper = HyperModelConfig(variant="ias", r=0.5, beta=1.0)  # eta = -1.5
    assert convexity_check(hyper, 2, np.array([1e-8])) == NOT_GUARANTEED
    with pytest.raises(NotApplicable):
        convexity_threshold(hyper, 2)


def test_threshold_matches_classification_boundary():
    rng = np.random.default_rng(23)
    for _ in range(30):
        r = float(rng.choice([-2.0, -1.0, -0.5, 0.3, 0.7]))
        L = int(rng.integers(1, 5))
        if r < 0:
            beta = float(rng.uniform(0.5, 2.0))
        else:
            beta = (L / 2 + 1 + float(rng.uniform(0.5, 3.0))) / r
        hyper = HyperModelConfig(variant="ias", r=r, beta=beta,
                                 vartheta=float(rng.uniform(0.1, 10.0)))
        t = convexity_threshold(hyper, L)[0]
        assert convexity_check(hyper, L, np.array([t * (1 - 1e-9)])) == CONVEX_AT_THETA
        assert convexity_check(hyper, L, np.array([t * (1 + 1e-9)])) == NOT_GUARANTEED


def test_nonpositive_theta_rejected():
    ctx = make_ctx(N=4, M=3, L=1, variant="ias", r=-1.0)
    xs = [np.zeros(4)]
    for bad in (np.zeros(3), -np.ones(3), np.array([1.0, np.inf, 1.0])):
        with pytest.raises(NonPositiveTheta):
            objective_ias(ctx, xs, bad)
    with pytest.raises(NonPositiveTheta):
        objective_ias(ctx, xs, np.ones(2))  # wrong length
