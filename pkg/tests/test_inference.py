import numpy as np
import pytest

from jointsparse.inference import (
    AlgorithmSpec,
    converged,
    least_squares_baseline,
    run,
)
from jointsparse.model import HyperModelConfig, MMVProblem, SolverConfig
from jointsparse.operators import (
    DenseMap,
    difference_operator,
    identity_operator,
    subsampled_dct_operator,
    whiten_problem,
)


def make_problem(N=20, M=14, L=3, seed=0, noise=1e-3, sparsifier="identity"):
    """Jointly sparse test problem, already whitened by the noise level."""
    rng = np.random.default_rng(seed)
    support = rng.choice(N, 4, replace=False)
    R = identity_operator(N) if sparsifier == "identity" else difference_operator(N)
    ops, ys, truths = [], [], []
    for _ in range(L):
        x = np.zeros(N)
        x[support] = rng.standard_normal(4)
        F = DenseMap(rng.standard_normal((M, N)) / np.sqrt(M))
        y = F.apply(x) + noise * rng.standard_normal(M)
        ops.append(F)
        ys.append(y)
        truths.append(x)
    problem = MMVProblem(ops, ys, R, noise_cov=[noise**2 * np.eye(M)] * L)
    return whiten_problem(problem), truths


IAS = HyperModelConfig(variant="ias", r=-1.0, beta=1.0, vartheta=1e-4)
GSBL = HyperModelConfig(variant="gsbl", beta=1.0, vartheta=1e4)


def test_converged_semantics():
    a = [np.array([1.0, 0.0])]
    b = [np.array([1.0, 1e-6])]
    assert converged(a, b, 1e-4)
    assert not converged(a, [np.array([1.1, 0.0])], 1e-4)
    # zero previous iterate never reports convergence against a real change
    assert not converged([np.zeros(2)], [np.array([1e-8, 0.0])], 1e-4)
    assert converged([np.zeros(2)], [np.zeros(2)], 1e-4)


@pytest.mark.parametrize("hyper", [IAS, GSBL], ids=["ias", "gsbl"])
@pytest.mark.parametrize("coupling", ["joint", "separate"])
def test_trace_non_increasing(hyper, coupling):
    problem, _ = make_problem(seed=1)
    spec = AlgorithmSpec(hyper.variant, coupling)
    result = run(problem, hyper, spec)
    trace = result.objective_trace
    assert trace.size >= 2
    drops = np.diff(trace)
    assert np.all(drops <= 1e-8 * np.maximum(1.0, np.abs(trace[:-1])))


@pytest.mark.parametrize("hyper", [IAS, GSBL], ids=["ias", "gsbl"])
def test_joint_and_separate_coincide_for_one_vector(hyper):
    problem, _ = make_problem(L=1, seed=2)
    joint = run(problem, hyper, AlgorithmSpec(hyper.variant, "joint"))
    sep = run(problem, hyper, AlgorithmSpec(hyper.variant, "separate"))
    np.testing.assert_allclose(sep.x_hat[0], joint.x_hat[0], rtol=1e-12, atol=1e-14)
    assert sep.theta_hat.shape == (1, problem.K)
    np.testing.assert_allclose(sep.theta_hat[0], joint.theta_hat, rtol=1e-12)
    np.testing.assert_allclose(sep.objective_trace, joint.objective_trace, rtol=1e-12)
    assert sep.iterations == joint.iterations


def test_joint_estimate_invariant_under_vector_permutation():
    problem, _ = make_problem(L=3, seed=3)
    perm = [2, 0, 1]
    shuffled = MMVProblem(
        [problem.forward_ops[i] for i in perm],
        [problem.measurements[i] for i in perm],
        problem.sparsifier,
    )
    a = run(problem, IAS)
    b = run(shuffled, IAS)
    np.testing.assert_allclose(b.theta_hat, a.theta_hat, rtol=1e-12)
    for i, j in enumerate(perm):
        np.testing.assert_allclose(b.x_hat[i], a.x_hat[j], rtol=1e-10, atol=1e-12)


def test_separate_theta_stacking_matches_single_runs():
    problem, _ = make_problem(L=3, seed=4)
    combined = run(problem, IAS, AlgorithmSpec("ias", "separate"))
    assert combined.theta_hat.shape == (3, problem.K)
    for l in range(3):
        single = run(
            MMVProblem(
                [problem.forward_ops[l]], [problem.measurements[l]], problem.sparsifier
            ),
            IAS,
            AlgorithmSpec("ias", "joint"),
        )
        np.testing.assert_allclose(combined.x_hat[l], single.x_hat[0], rtol=1e-12)
        np.testing.assert_allclose(combined.theta_hat[l], single.theta_hat, rtol=1e-12)


@pytest.mark.parametrize("hyper", [IAS, GSBL], ids=["ias", "gsbl"])
def test_recovers_sparse_truth(hyper):
    problem, truths = make_problem(N=24, M=18, L=3, seed=5, noise=1e-4)
    result = run(problem, hyper)
    assert result.converged
    for x_hat, x in zip(result.x_hat, truths):
        assert np.linalg.norm(x_hat - x) <= 1e-2 * np.linalg.norm(x)


def test_direct_and_pcg_paths_agree():
    problem, _ = make_problem(N=20, M=14, L=2, seed=6)
    a = run(problem, IAS, cfg=SolverConfig(inner_solver="direct"))
    b = run(problem, IAS, cfg=SolverConfig(inner_solver="pcg", inner_tol=1e-12))
    for xa, xb in zip(a.x_hat, b.x_hat):
        np.testing.assert_allclose(xb, xa, atol=1e-6)
    np.testing.assert_allclose(b.theta_hat, a.theta_hat, rtol=1e-4, atol=1e-12)


def test_outer_budget_respected():
    problem, _ = make_problem(seed=7)
    result = run(problem, IAS, cfg=SolverConfig(outer_maxit=3, convergence_tol=1e-14))
    assert result.iterations == 3
    assert not result.converged
    assert result.objective_trace.size == 3


def test_least_squares_baseline_orthogonality():
    rng = np.random.default_rng(8)
    F = rng.standard_normal((10, 6))
    x_true = rng.standard_normal(6)
    y = F @ x_true
    problem = MMVProblem([DenseMap(F)], [y], identity_operator(6))
    sol = least_squares_baseline(problem)[0]
    np.testing.assert_allclose(sol, x_true, rtol=1e-10)
    # Overdetermined noisy case: residual orthogonal to the range of F.
    y2 = y + rng.standard_normal(10)
    problem2 = MMVProblem([DenseMap(F)], [y2], identity_operator(6))
    sol2 = least_squares_baseline(problem2)[0]
    np.testing.assert_allclose(F.T @ (y2 - F @ sol2), 0.0, atol=1e-10)


def test_least_squares_baseline_underdetermined_min_norm():
    rng = np.random.default_rng(9)
    F = rng.standard_normal((4, 9))
    y = rng.standard_normal(4)
    sol = least_squares_baseline(
        MMVProblem([DenseMap(F)], [y], identity_operator(9))
    )[0]
    np.testing.assert_allclose(F @ sol, y, atol=1e-10)
    # minimum-norm solution lies in the row space
    np.testing.assert_allclose(
        sol, F.T @ np.linalg.solve(F @ F.T, y), atol=1e-10
    )


def test_dct_forward_path_end_to_end():
    rng = np.random.default_rng(10)
    N, M, L = 32, 20, 4
    sigma = 1e-5
    support = rng.choice(N, 3, replace=False)
    idx = np.sort(rng.choice(N, M, replace=False))
    F = subsampled_dct_operator(N, idx)
    ops, ys, truths = [], [], []
    for _ in range(L):
        x = np.zeros(N)
        x[support] = rng.standard_normal(3)
        ops.append(F)
        ys.append(F.apply(x) + sigma * rng.standard_normal(M))
        truths.append(x)
    problem = whiten_problem(
        MMVProblem(ops, ys, identity_operator(N),
                   noise_cov=[sigma**2 * np.eye(M)] * L)
    )
    result = run(problem, IAS)
    for x_hat, x in zip(result.x_hat, truths):
        assert np.linalg.norm(x_hat - x) <= 5e-3 * np.linalg.norm(x)
