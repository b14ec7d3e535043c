import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from lubricav.sparse import (
    AssemblyPattern,
    SingularMatrix,
    SparseMatrix,
    equilibrate,
    factorize,
    from_triplets,
    read_coordinate,
    solve,
    write_coordinate,
)


class TestSparseMatrix:
    def test_from_triplets_sums_duplicates(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (1, 1, 2.0), (0, 0, 0.5)])
        np.testing.assert_array_equal(A.toarray(), [[1.5, 0.0], [0.0, 2.0]])

    def test_empty(self):
        A = from_triplets(3, 2, [])
        assert A.nnz == 0
        np.testing.assert_array_equal(A @ np.ones(2), 0.0)
        assert A.norm_inf() == 0.0

    def test_matvec_and_transpose(self, rng):
        D = rng.standard_normal((5, 4))
        A = SparseMatrix.from_scipy(sp.csr_matrix(D))
        x, y = rng.standard_normal(4), rng.standard_normal(5)
        np.testing.assert_allclose(A @ x, D @ x, rtol=1e-14)
        np.testing.assert_allclose(A.rmatvec(y), D.T @ y, rtol=1e-14)
        np.testing.assert_array_equal(A.T.toarray(), D.T)

    def test_shape_checked(self):
        A = from_triplets(2, 3, [(0, 0, 1.0)])
        with pytest.raises(ValueError):
            A @ np.ones(2)

    def test_norm_inf(self):
        A = from_triplets(2, 2, [(0, 0, -3.0), (0, 1, 1.0), (1, 1, 2.0)])
        assert A.norm_inf() == 4.0

    def test_pattern_refill(self):
        pat = AssemblyPattern(2, 2, [0, 1, 0], [0, 1, 0])
        np.testing.assert_array_equal(pat.fill([1.0, 2.0, 3.0]).toarray(), [[4.0, 0.0], [0.0, 2.0]])
        np.testing.assert_array_equal(pat.fill([0.0, 1.0, 0.0]).toarray(), [[0.0, 0.0], [0.0, 1.0]])


class TestFactorize:
    def test_diagonal(self):
        np.testing.assert_allclose(solve(from_triplets(2, 2, [(0, 0, 2.0), (1, 1, 3.0)]), [2.0, 3.0]), [1.0, 1.0])

    def test_needs_pivoting(self):
        A = from_triplets(2, 2, [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)])
        np.testing.assert_allclose(solve(A, [0.0, 1.0]), [1.0, -1.0])

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            factorize(np.ones((2, 2)))

    def test_non_square(self):
        with pytest.raises(ValueError):
            factorize(np.ones((2, 3)))

    def test_empty(self):
        assert factorize(np.zeros((0, 0))).solve(np.zeros(0)).shape == (0,)

    def test_badly_scaled_saddle(self, rng):
        n, m = 30, 10
        Q = rng.standard_normal((n, n))
        M = 1e-15 * (Q @ Q.T + n * np.eye(n))
        B = rng.standard_normal((n, m))
        K = np.block([[M, B], [B.T, -np.diag(rng.uniform(1e-6, 1e-4, m))]])
        b = rng.standard_normal(n + m)
        x = solve(sp.csc_matrix(K), b)
        np.testing.assert_allclose(x, np.linalg.solve(K, b), rtol=1e-6)

    def test_equilibration_keeps_symmetry(self, rng):
        A = rng.standard_normal((6, 6))
        A = A + A.T
        r, c, S = equilibrate(sp.csc_matrix(A))
        np.testing.assert_allclose(r, c)
        np.testing.assert_allclose(S.toarray(), S.toarray().T, rtol=1e-14)

    def test_deterministic(self, rng):
        A = sp.random(50, 50, density=0.1, random_state=2) + sp.eye(50)
        b = rng.standard_normal(50)
        assert np.array_equal(solve(A, b), solve(A, b))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 25), st.integers(0, 10**6))
    def test_residual_bound(self, n, seed):
        g = np.random.default_rng(seed)
        A = g.standard_normal((n, n)) + n * np.eye(n)
        b = g.standard_normal(n)
        x = solve(sp.csc_matrix(A), b)
        bound = 200 * np.finfo(float).eps * np.linalg.norm(A, np.inf) * np.linalg.norm(x, np.inf)
        assert np.linalg.norm(A @ x - b, np.inf) <= bound + 1e-300


def test_matrix_market_round_trip(tmp_path, rng):
    A = SparseMatrix.from_scipy(sp.random(7, 5, density=0.4, random_state=4) * np.pi)
    write_coordinate(tmp_path / "a.mtx", A, comment="test")
    B = read_coordinate(tmp_path / "a.mtx")
    np.testing.assert_array_equal(A.toarray(), B.toarray())
