"""Linear operators and measurement-model construction.

Everything is expressed through a small LinearMap interface (apply, adjoint
apply, shape) so that solvers can stay matrix-free. Dense reference semantics
define correctness; FFT-backed maps are an implementation detail and must
agree with their densified versions.

Conventions used throughout:

* Vectorized images are column-major (Fortran order): pixel (i, j) of an
  nx-by-ny image sits at index i + j*nx.
* Frequency-grid index sets refer to the centered (DC in the middle) spectrum,
  flattened column-major the same way.
* In-memory index sets are 0-based numpy integer arrays. CSV files store them
  1-based, one integer per line; dense matrices are stored row-major with no
  header.
"""
from __future__ import annotations

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse

from .errors import DimensionMismatch, IndexOutOfRange, NotPositiveDefinite
from .model import MMVProblem

# Maps with at most this many entries may be densified for fallback paths.
_DENSE_FALLBACK_ENTRIES = 1 << 22


class LinearMap:
    """Matrix action with explicit shape.

    Subclasses implement _apply and _adjoint on validated one-dimensional
    arrays. apply/adjoint_apply check lengths and raise DimensionMismatch.
    """

    is_complex = False

    def __init__(self, rows, cols):
        self.rows = int(rows)
        self.cols = int(cols)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def apply(self, x):
        x = np.asarray(x)
        if x.shape != (self.cols,):
            raise DimensionMismatch(
                f"apply expected a vector of length {self.cols}, got shape {x.shape}"
            )
        return self._apply(x)

    def adjoint_apply(self, y):
        y = np.asarray(y)
        if y.shape != (self.rows,):
            raise DimensionMismatch(
                f"adjoint expected a vector of length {self.rows}, got shape {y.shape}"
            )
        return self._adjoint(y)

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError

    def to_dense(self):
        """Materialize the matrix column by column. Meant for small maps."""
        dtype = complex if self.is_complex else float
        out = np.zeros((self.rows, self.cols), dtype=dtype)
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            out[:, j] = self._apply(e)
            e[j] = 0.0
        return out

    def gram_diagonal(self):
        """Diagonal of A^T A (column squared norms), used for preconditioning.

        The default densifies when cheap and otherwise falls back to ones,
        which is always a valid (if weaker) Jacobi surrogate.
        """
        if self.rows * self.cols <= _DENSE_FALLBACK_ENTRIES:
            d = self.to_dense()
            return np.einsum("ij,ij->j", np.abs(d), np.abs(d))
        return np.ones(self.cols)


class DenseMap(LinearMap):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionMismatch("dense operator needs a 2-d array")
        super().__init__(*matrix.shape)
        self.matrix = matrix

    def _apply(self, x):
        return self.matrix @ x

    def _adjoint(self, y):
        return self.matrix.T @ y

    def to_dense(self):
        return self.matrix

    def gram_diagonal(self):
        return np.einsum("ij,ij->j", self.matrix, self.matrix)


class SparseMap(LinearMap):
    def __init__(self, matrix):
        matrix = scipy.sparse.csr_matrix(matrix)
        super().__init__(*matrix.shape)
        self.matrix = matrix

    def _apply(self, x):
        return self.matrix @ x

    def _adjoint(self, y):
        return self.matrix.T @ y

    def to_dense(self):
        return self.matrix.toarray()

    def gram_diagonal(self):
        sq = self.matrix.multiply(self.matrix)
        return np.asarray(sq.sum(axis=0)).ravel()


class ScaledMap(LinearMap):
    """scale * inner, used e.g. for scalar noise whitening of FFT maps."""

    def __init__(self, inner, scale):
        super().__init__(inner.rows, inner.cols)
        self.inner = inner
        self.scale = float(scale)
        self.is_complex = inner.is_complex

    def _apply(self, x):
        return self.scale * self.inner._apply(x)

    def _adjoint(self, y):
        return self.scale * self.inner._adjoint(y)

    def to_dense(self):
        return self.scale * self.inner.to_dense()

    def gram_diagonal(self):
        return self.scale**2 * self.inner.gram_diagonal()


def _validate_index_set(omega, n, what="index set"):
    omega = np.asarray(omega, dtype=int).ravel()
    if omega.size == 0:
        raise IndexOutOfRange(f"{what} is empty")
    if np.any(omega < 0) or np.any(omega >= n):
        raise IndexOutOfRange(f"{what} has entries outside [0, {n - 1}]")
    if np.unique(omega).size != omega.size:
        raise IndexOutOfRange(f"{what} contains duplicate entries")
    return omega


class SubsampledDCT(LinearMap):
    """Rows omega of the orthonormal type-II discrete cosine transform."""

    def __init__(self, N, omega):
        omega = _validate_index_set(omega, N, "frequency set")
        super().__init__(len(omega), N)
        self.N = int(N)
        self.omega = omega

    def _apply(self, x):
        return scipy.fft.dct(x, type=2, norm="ortho")[self.omega]

    def _adjoint(self, y):
        z = np.zeros(self.N)
        z[self.omega] = y
        return scipy.fft.idct(z, type=2, norm="ortho")

    def to_dense(self):
        return scipy.fft.dct(np.eye(self.N), type=2, norm="ortho", axis=0)[self.omega]

    def gram_diagonal(self):
        d = self.to_dense()
        return np.einsum("ij,ij->j", d, d)


class SubsampledDFT2(LinearMap):
    """Selected frequencies of the unitary 2-d DFT of an n-by-n image.

    The image argument is the column-major vectorized pixel array; the output
    collects the centered spectrum at the (sorted) mask indices. Complex
    valued: realify() before feeding it to the real-valued solvers.
    """

    is_complex = True

    def __init__(self, mask, n):
        mask = _validate_index_set(mask, n * n, "frequency mask")
        super().__init__(len(mask), n * n)
        self.n = int(n)
        self.mask = mask

    def _apply(self, x):
        img = np.reshape(x, (self.n, self.n), order="F")
        spec = np.fft.fftshift(np.fft.fft2(img, norm="ortho"))
        return spec.ravel(order="F")[self.mask]

    def _adjoint(self, y):
        buf = np.zeros(self.n * self.n, dtype=complex)
        buf[self.mask] = y
        spec = np.reshape(buf, (self.n, self.n), order="F")
        img = np.fft.ifft2(np.fft.ifftshift(spec), norm="ortho")
        return img.ravel(order="F")

    def gram_diagonal(self):
        # Unitary DFT entries all have squared magnitude 1/n^2.
        return np.full(self.cols, self.rows / self.cols)


class RealifiedMap(LinearMap):
    """Real 2M-by-N view [Re(C); Im(C)] of a complex map C with real domain."""

    def __init__(self, cmap):
        super().__init__(2 * cmap.rows, cmap.cols)
        self.cmap = cmap

    def _apply(self, x):
        z = self.cmap._apply(x)
        return np.concatenate([z.real, z.imag])

    def _adjoint(self, y):
        m = self.cmap.rows
        z = y[:m] + 1j * y[m:]
        return self.cmap._adjoint(z).real

    def to_dense(self):
        d = self.cmap.to_dense()
        return np.vstack([d.real, d.imag])

    def gram_diagonal(self):
        # Column norms of [Re; Im] equal the complex column norms.
        return self.cmap.gram_diagonal()


class WhitenedMap(LinearMap):
    """C_chol^{-1} F for a noise covariance Cholesky factor (lower)."""

    def __init__(self, inner, chol_lower):
        super().__init__(inner.rows, inner.cols)
        self.inner = inner
        self.chol = chol_lower

    def _apply(self, x):
        return scipy.linalg.solve_triangular(self.chol, self.inner._apply(x), lower=True)

    def _adjoint(self, y):
        z = scipy.linalg.solve_triangular(self.chol, y, lower=True, trans="T")
        return self.inner._adjoint(z)

    def to_dense(self):
        return scipy.linalg.solve_triangular(self.chol, self.inner.to_dense(), lower=True)


def identity_operator(n):
    return SparseMap(scipy.sparse.identity(n, format="csr"))


def gaussian_blur_operator(n, gamma):
    """Discretized periodic-free Gaussian convolution on n grid points of [0, 1].

    Entry (i, j) is h * k(h*(i - j)) with h = 1/n and the Gaussian kernel
    k(s) = exp(-s^2 / (2 gamma^2)) / (2 pi gamma^2).
    """
    if gamma <= 0:
        raise DimensionMismatch("blur width gamma must be positive")
    h = 1.0 / n
    diff = h * np.subtract.outer(np.arange(n), np.arange(n))
    kernel = np.exp(-(diff**2) / (2 * gamma**2)) / (2 * np.pi * gamma**2)
    return DenseMap(h * kernel)


def difference_operator(n):
    """(n-1)-by-n forward differences: row k maps x to x[k+1] - x[k]."""
    if n < 2:
        raise DimensionMismatch("difference operator needs n >= 2")
    d = scipy.sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    return SparseMap(d)


def gradient2d_operator(nx, ny):
    """Anisotropic first-order differences of an nx-by-ny image.

    Acts on the column-major vectorized image. Output stacks all vertical
    (within-column) differences first, then all horizontal (within-row)
    differences: (ny*(nx-1) + nx*(ny-1)) rows total.
    """
    d_col = scipy.sparse.kron(scipy.sparse.identity(ny), difference_operator(nx).matrix)
    d_row = scipy.sparse.kron(difference_operator(ny).matrix, scipy.sparse.identity(nx))
    return SparseMap(scipy.sparse.vstack([d_col, d_row], format="csr"))


def subsampled_dct_operator(N, omega):
    return SubsampledDCT(N, omega)


def subsampled_dft_operator(mask, n):
    return SubsampledDFT2(mask, n)


def radial_sampling_mask(n, n_lines, angle_offset=0.0):
    """Index set of a radial-line sampling pattern on an n-by-n frequency grid.

    Lines pass through the grid center (the DC bin of the centered spectrum)
    at angles angle_offset + i*pi/n_lines. Each line is rasterized from
    finely spaced sample points: the coordinate along which the line advances
    fastest is rounded to the nearest index while the transverse coordinate
    marks both straddling cells, giving lines two cells wide. 20 lines cover
    roughly 16 percent of a 256x256 grid. Returns sorted 0-based column-major
    indices; the center index is always included.
    """
    if n_lines < 1:
        raise IndexOutOfRange("need at least one line")
    c = n // 2
    half = n / np.sqrt(2.0) + 1.0
    t = np.linspace(-half, half, 4 * n)
    rows_all = []
    cols_all = []
    for i in range(n_lines):
        ang = angle_offset + i * np.pi / n_lines
        r = c + t * np.sin(ang)
        q = c + t * np.cos(ang)
        if abs(np.cos(ang)) >= abs(np.sin(ang)):
            pairs = [(np.floor(r), np.round(q)), (np.ceil(r), np.round(q))]
        else:
            pairs = [(np.round(r), np.floor(q)), (np.round(r), np.ceil(q))]
        for rr, qq in pairs:
            keep = (rr >= 0) & (rr < n) & (qq >= 0) & (qq < n)
            rows_all.append(rr[keep].astype(int))
            cols_all.append(qq[keep].astype(int))
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    idx = rows + cols * n
    idx = np.append(idx, c + c * n)  # DC bin, guaranteed
    return np.unique(idx)


def realify(cmap, y):
    """Stack a complex map and measurement into their real 2M counterparts."""
    y = np.asarray(y)
    if y.shape != (cmap.rows,):
        raise DimensionMismatch(
            f"measurement has shape {y.shape}, operator has {cmap.rows} rows"
        )
    return RealifiedMap(cmap), np.concatenate([y.real, y.imag])


def whiten(forward, y, cov):
    """Transform (F, y) so the noise covariance becomes the identity.

    cov must be symmetric positive definite; its lower Cholesky factor C
    gives the whitened pair (C^{-1} F, C^{-1} y). An exact identity covariance
    returns the inputs unchanged.
    """
    y = np.asarray(y, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (forward.rows, forward.rows):
        raise DimensionMismatch(
            f"covariance has shape {cov.shape}, expected ({forward.rows}, {forward.rows})"
        )
    if y.shape != (forward.rows,):
        raise DimensionMismatch("measurement length does not match the operator")
    if np.array_equal(cov, np.eye(forward.rows)):
        return forward, y
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
        raise NotPositiveDefinite("noise covariance is not symmetric")
    try:
        chol = scipy.linalg.cholesky(cov, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"noise covariance is not positive definite: {exc}")
    y_w = scipy.linalg.solve_triangular(chol, y, lower=True)
    if isinstance(forward, (DenseMap, SparseMap)):
        return DenseMap(scipy.linalg.solve_triangular(chol, forward.to_dense(), lower=True)), y_w
    return WhitenedMap(forward, chol), y_w


def whiten_problem(problem: MMVProblem) -> MMVProblem:
    """Apply whiten() to every measurement vector carrying a noise covariance."""
    if problem.noise_cov is None:
        return problem
    ops, ys = [], []
    for F, y, C in zip(problem.forward_ops, problem.measurements, problem.noise_cov):
        Fw, yw = whiten(F, y, C)
        ops.append(Fw)
        ys.append(yw)
    return MMVProblem(ops, ys, problem.sparsifier, noise_cov=None)


def save_matrix_csv(path, matrix):
    """Write a dense matrix row-major as comma-separated values, no header."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    np.savetxt(path, matrix, fmt="%.17g", delimiter=",")


def load_matrix_csv(path):
    m = np.loadtxt(path, delimiter=",", ndmin=2)
    return m


def save_index_set(path, indices):
    """Write a 0-based index set as newline-separated 1-based integers."""
    indices = np.asarray(indices, dtype=int).ravel()
    with open(path, "w") as fh:
        for i in indices:
            fh.write(f"{i + 1}\n")


def load_index_set(path, n=None):
    """Read newline-separated 1-based integers into a 0-based array."""
    with open(path) as fh:
        vals = [int(line) for line in fh.read().split()]
    idx = np.asarray(vals, dtype=int) - 1
    if n is not None:
        idx = _validate_index_set(idx, n)
    return idx
