import numpy as np
import pytest

from jointsparse.errors import DimensionMismatch, IndexOutOfRange, NotPositiveDefinite
from jointsparse.model import MMVProblem
from jointsparse.operators import (
    DenseMap,
    ScaledMap,
    SparseMap,
    difference_operator,
    gaussian_blur_operator,
    gradient2d_operator,
    identity_operator,
    load_index_set,
    load_matrix_csv,
    radial_sampling_mask,
    realify,
    save_index_set,
    save_matrix_csv,
    subsampled_dct_operator,
    subsampled_dft_operator,
    whiten,
    whiten_problem,
)


def adjoint_gap(op, rng, trials=5):
    """max |<Ax, y> - <x, A^T y>| over random draws (complex-aware)."""
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.cols)
        if op.is_complex:
            y = rng.standard_normal(op.rows) + 1j * rng.standard_normal(op.rows)
            lhs = np.vdot(y, op.apply(x))
            rhs = np.vdot(op.adjoint_apply(y), x)
        else:
            y = rng.standard_normal(op.rows)
            lhs = float(op.apply(x) @ y)
            rhs = float(x @ op.adjoint_apply(y))
        worst = max(worst, abs(lhs - rhs))
    return worst


def test_adjoint_consistency_across_map_types():
    rng = np.random.default_rng(0)
    mask = radial_sampling_mask(8, 3)
    ops = [
        DenseMap(rng.standard_normal((5, 7))),
        SparseMap(difference_operator(9).matrix),
        ScaledMap(DenseMap(rng.standard_normal((4, 6))), 2.5),
        subsampled_dct_operator(12, np.array([0, 3, 7])),
        subsampled_dft_operator(mask, 8),
        realify(subsampled_dft_operator(mask, 8), np.zeros(mask.size, complex))[0],
    ]
    for op in ops:
        assert adjoint_gap(op, rng) < 1e-10


def test_apply_rejects_bad_length():
    op = DenseMap(np.eye(3))
    with pytest.raises(DimensionMismatch):
        op.apply(np.ones(4))
    with pytest.raises(DimensionMismatch):
        op.adjoint_apply(np.ones(2))


def test_to_dense_matches_apply():
    rng = np.random.default_rng(1)
    op = subsampled_dct_operator(10, np.array([1, 4, 9]))
    dense = op.to_dense()
    x = rng.standard_normal(10)
    np.testing.assert_allclose(dense @ x, op.apply(x), atol=1e-12)


def test_gram_diagonal():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((6, 4))
    np.testing.assert_allclose(
        DenseMap(m).gram_diagonal(), np.diag(m.T @ m), atol=1e-12
    )
    mask = radial_sampling_mask(8, 2)
    op = subsampled_dft_operator(mask, 8)
    np.testing.assert_allclose(
        op.gram_diagonal(), np.diag((op.to_dense().conj().T @ op.to_dense()).real),
        atol=1e-12,
    )


def test_blur_operator_values():
    op = gaussian_blur_operator(40, 0.03)
    expected_diag = (1 / 40) / (2 * np.pi * 0.03**2)
    assert abs(expected_diag - 4.42097) < 1e-4
    np.testing.assert_allclose(np.diag(op.matrix), expected_diag, rtol=1e-12)
    # Symmetric in |i - j| and strictly positive
    np.testing.assert_allclose(op.matrix, op.matrix.T, atol=1e-15)
    assert np.all(op.matrix > 0)


def test_difference_operator():
    op = difference_operator(3)
    np.testing.assert_allclose(op.apply(np.array([0.0, 1.0, 3.0])), [1.0, 2.0])
    dense = difference_operator(7).to_dense()
    assert np.linalg.matrix_rank(dense) == 6  # kernel = constants


def test_gradient2d_small_image():
    # 2x2 image [[a, b], [c, d]], column-major vector [a, c, b, d].
    a, b, c, d = 1.0, 2.0, 4.0, 7.0
    op = gradient2d_operator(2, 2)
    out = op.apply(np.array([a, c, b, d]))
    np.testing.assert_allclose(out, [c - a, d - b, b - a, d - c])
    assert op.shape == (4, 4)


def test_gradient2d_shape_and_kernel():
    nx, ny = 4, 5
    op = gradient2d_operator(nx, ny)
    assert op.shape == (ny * (nx - 1) + nx * (ny - 1), nx * ny)
    dense = op.to_dense()
    # kernel is exactly the constant image
    assert np.linalg.matrix_rank(dense) == nx * ny - 1
    np.testing.assert_allclose(op.apply(np.ones(nx * ny)), 0.0, atol=1e-14)


def test_dct_operator_orthonormal_rows():
    N = 16
    full = subsampled_dct_operator(N, np.arange(N)).to_dense()
    np.testing.assert_allclose(full @ full.T, np.eye(N), atol=1e-10)
    sub = subsampled_dct_operator(N, np.array([2, 5]))
    np.testing.assert_allclose(sub.to_dense(), full[[2, 5]], atol=1e-12)


def test_index_set_validation():
    with pytest.raises(IndexOutOfRange):
        subsampled_dct_operator(8, np.array([0, 8]))
    with pytest.raises(IndexOutOfRange):
        subsampled_dct_operator(8, np.array([1, 1]))
    with pytest.raises(IndexOutOfRange):
        subsampled_dct_operator(8, np.array([], dtype=int))


def test_dft_constant_image_dc_only():
    n = 8
    c = n // 2
    dc = c + c * n
    op = subsampled_dft_operator(np.array([dc]), n)
    out = op.apply(np.full(n * n, 0.7))
    assert out.shape == (1,)
    np.testing.assert_allclose(out[0], n * 0.7, atol=1e-12)


def test_dft_unitary_when_full():
    n = 4
    op = subsampled_dft_operator(np.arange(n * n), n)
    dense = op.to_dense()
    np.testing.assert_allclose(dense.conj().T @ dense, np.eye(n * n), atol=1e-12)


def test_radial_mask_axis_aligned_line():
    n = 16
    mask = radial_sampling_mask(n, 1, 0.0)
    rows = mask % n
    cols = mask // n
    assert set(rows.tolist()) == {n // 2}
    assert sorted(cols.tolist()) == list(range(n))
    assert mask.size == n


def test_radial_mask_center_and_distinctness():
    n, n_lines = 32, 5
    center = (n // 2) + (n // 2) * n
    m1 = radial_sampling_mask(n, n_lines, 0.0)
    m2 = radial_sampling_mask(n, n_lines, np.pi / (2 * n_lines))
    assert center in m1 and center in m2
    assert not np.array_equal(m1, m2)
    assert np.intersect1d(m1, m2).size >= 1


def test_radial_mask_density_at_full_scale():
    mask = radial_sampling_mask(256, 20)
    density = mask.size / 256**2
    assert 0.12 <= density <= 0.20


def test_realify_consistency():
    rng = np.random.default_rng(3)
    n = 8
    mask = radial_sampling_mask(n, 3)
    cmap = subsampled_dft_operator(mask, n)
    x = rng.standard_normal(n * n)
    y = cmap.apply(x)
    rmap, y_stacked = realify(cmap, y)
    np.testing.assert_allclose(y_stacked[: mask.size], y.real, atol=1e-14)
    np.testing.assert_allclose(y_stacked[mask.size :], y.imag, atol=1e-14)
    np.testing.assert_allclose(rmap.apply(x), y_stacked, atol=1e-12)
    # norm preserved: |Cx| = |[Re; Im] x|
    assert abs(np.linalg.norm(y) - np.linalg.norm(y_stacked)) < 1e-12


def test_realify_real_map_bottom_half_zero():
    real_matrix = np.eye(3)

    class FakeComplex(DenseMap):
        is_complex = True

        def _apply(self, x):
            return (self.matrix @ x).astype(complex)

    op = FakeComplex(real_matrix)
    rmap, _ = realify(op, np.zeros(3, complex))
    out = rmap.apply(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(out[3:], 0.0, atol=1e-15)


def test_whiten_identity_returns_inputs():
    rng = np.random.default_rng(4)
    op = DenseMap(rng.standard_normal((4, 3)))
    y = rng.standard_normal(4)
    op2, y2 = whiten(op, y, np.eye(4))
    assert op2 is op
    np.testing.assert_array_equal(y2, y)


def test_whiten_scalar_covariance():
    rng = np.random.default_rng(5)
    op = DenseMap(rng.standard_normal((4, 3)))
    y = rng.standard_normal(4)
    op2, y2 = whiten(op, y, 4.0 * np.eye(4))
    np.testing.assert_allclose(op2.to_dense(), op.matrix / 2.0, atol=1e-12)
    np.testing.assert_allclose(y2, y / 2.0, atol=1e-12)


def test_whiten_general_spd():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((5, 5))
    cov = A @ A.T + 5 * np.eye(5)
    op = DenseMap(rng.standard_normal((5, 3)))
    y = rng.standard_normal(5)
    op2, y2 = whiten(op, y, cov)
    # Whitened residual covariance: C^{-1} cov C^{-T} = I
    L = np.linalg.cholesky(cov)
    np.testing.assert_allclose(op2.to_dense(), np.linalg.solve(L, op.matrix), atol=1e-10)
    np.testing.assert_allclose(y2, np.linalg.solve(L, y), atol=1e-10)


def test_whiten_rejects_bad_covariance():
    op = DenseMap(np.eye(3))
    y = np.zeros(3)
    with pytest.raises(NotPositiveDefinite):
        whiten(op, y, -np.eye(3))
    bad = np.eye(3)
    bad[0, 1] = 0.5  # asymmetric
    with pytest.raises(NotPositiveDefinite):
        whiten(op, y, bad)
    with pytest.raises(DimensionMismatch):
        whiten(op, y, np.eye(4))


def test_whiten_problem_passthrough_and_action():
    rng = np.random.default_rng(7)
    op = DenseMap(rng.standard_normal((4, 4)))
    y = rng.standard_normal(4)
    problem = MMVProblem([op], [y], identity_operator(4))
    assert whiten_problem(problem) is problem
    noisy = MMVProblem([op], [y], identity_operator(4), noise_cov=[0.25 * np.eye(4)])
    white = whiten_problem(noisy)
    np.testing.assert_allclose(white.measurements[0], y / 0.5, atol=1e-12)
    assert white.noise_cov is None


def test_matrix_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    m = rng.standard_normal((4, 6))
    path = tmp_path / "m.csv"
    save_matrix_csv(path, m)
    np.testing.assert_allclose(load_matrix_csv(path), m, rtol=1e-15)
    v = rng.standard_normal(5)
    save_matrix_csv(tmp_path / "v.csv", v.reshape(-1, 1))
    np.testing.assert_allclose(load_matrix_csv(tmp_path / "v.csv").ravel(), v)


def test_index_set_csv_roundtrip(tmp_path):
    idx = np.array([0, 5, 2])
    path = tmp_path / "idx.csv"
    save_index_set(path, idx)
    text = path.read_text().split()
    assert text == ["1", "6", "3"]  # stored 1-based
    np.testing.assert_array_equal(load_index_set(path), idx)
    with pytest.raises(IndexOutOfRange):
        load_index_set(path, n=5)
