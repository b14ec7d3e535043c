"""Compressed-row matrices, triplet assembly and direct factorisation."""
from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels


class SingularMatrix(RuntimeError):
    """The matrix could not be factorised (zero pivot)."""


class SparseMatrix:
    """CSR matrix with sorted, unique column indices in every row."""

    __slots__ = ("shape", "indptr", "indices", "data", "_scipy")

    def __init__(self, shape, indptr, indices, data):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=float)
        self._scipy = None
        if self.indptr.shape != (self.shape[0] + 1,):
            raise ValueError("indptr length does not match the row count")

    @classmethod
    def from_arrays(cls, nrows, ncols, rows, cols, vals):
        indptr, indices, data, _ = kernels.triplets_to_csr(nrows, ncols, rows, cols, vals)
        return cls((nrows, ncols), indptr, indices, data)

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape, m.indptr, m.indices, m.data)

    @property
    def nnz(self):
        return self.data.size

    def matvec(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape != (self.shape[1],):
            raise ValueError(f"expected vector of length {self.shape[1]}, got {x.shape}")
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def rmatvec(self, y):
        """``A.T @ y``."""
        return self.to_scipy().T @ np.asarray(y, dtype=float)

    def to_scipy(self):
        if self._scipy is None:
            self._scipy = sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)
        return self._scipy

    def toarray(self):
        return self.to_scipy().toarray()

    def transpose(self):
        return SparseMatrix.from_scipy(self.to_scipy().T.tocsr())

    @property
    def T(self):
        return self.transpose()

    def abs(self):
        return SparseMatrix(self.shape, self.indptr, self.indices, np.abs(self.data))

    def diagonal(self):
        return self.to_scipy().diagonal()

    def norm_inf(self):
        if self.nnz == 0:
            return 0.0
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        return float(np.bincount(rows, weights=np.abs(self.data), minlength=self.shape[0]).max())


def from_triplets(rows: int, cols: int, entries) -> SparseMatrix:
    """Build a matrix from ``(i, j, value)`` triplets, summing duplicates."""
    entries = list(entries)
    if entries:
        i, j, v = (np.array(c) for c in zip(*entries))
    else:
        i = j = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    return SparseMatrix.from_arrays(rows, cols, i, j, v)


class AssemblyPattern:
    """Fixed triplet layout that can be refilled with new values cheaply."""

    def __init__(self, nrows, ncols, rows, cols):
        zeros = np.zeros(np.asarray(rows).size)
        self.indptr, self.indices, _, self.slot = kernels.triplets_to_csr(nrows, ncols, rows, cols, zeros)
        self.shape = (nrows, ncols)

    def fill(self, vals) -> SparseMatrix:
        data = np.bincount(self.slot, weights=np.asarray(vals, dtype=float).ravel(), minlength=self.indices.size)
        return SparseMatrix(self.shape, self.indptr, self.indices, data)


def equilibrate(m, max_iter=30, tol=1e-2):
    """Ruiz scaling: returns ``(r, c, scaled)`` with ``scaled = diag(r) m diag(c)``.

    Every row and column of ``scaled`` (CSC) ends with an infinity norm
    within ``tol`` of one.  Symmetric input keeps ``r == c``.
    """
    a = sp.csc_matrix(m, copy=True)
    a.sum_duplicates()
    c, r, data = kernels.ruiz_scale(
        a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data, a.shape[0], max_iter, tol
    )
    a.data = data
    return r, c, a


class Factorization:
    """LU factors of an equilibrated square sparse matrix.

    SuperLU with COLAMD ordering and threshold partial pivoting; the
    pivoting makes symmetric indefinite (saddle point) matrices safe.
    """

    def __init__(self, lu, shape, row_scale=None, col_scale=None):
        self._lu = lu
        self.shape = shape
        self._r = row_scale
        self._c = col_scale

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self._lu is None:
            return np.zeros_like(b)
        x = self._c * self._lu.solve(self._r * b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrix("factorisation produced non-finite values")
        return x


def factorize(A, equilibrate_matrix=True) -> Factorization:
    """Factorise a square (possibly symmetric indefinite) matrix.

    Accepts a :class:`SparseMatrix` or any scipy sparse matrix.  Raises
    :class:`SingularMatrix` on an unavoidable zero pivot.
    """
    m = A.to_scipy() if isinstance(A, SparseMatrix) else A
    if not sp.issparse(m):
        m = sp.csc_matrix(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    if m.shape[0] == 0:
        return Factorization(None, m.shape)
    if equilibrate_matrix:
        r, c, m = equilibrate(m)
    else:
        r = c = np.ones(m.shape[0])
        m = sp.csc_matrix(m)
    try:
        lu = spla.splu(m, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularMatrix(str(exc)) from exc
    return Factorization(lu, m.shape, r, c)


def solve(A, b):
    return factorize(A).solve(b)


def write_coordinate(path, A: SparseMatrix, comment=""):
    """Write a matrix in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), A.to_scipy().tocoo(), comment=comment, precision=17)


def read_coordinate(path) -> SparseMatrix:
    return SparseMatrix.from_scipy(scipy.io.mmread(str(path)))
