import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from tumoursim.linalg import (AssemblyError, SingularSystemError, TripletBuffer, direct_solve,
                              finalize)


def test_duplicates_are_summed():
    buf = TripletBuffer((1, 1))
    buf.add([0, 0], [0, 0], [1.0, 2.0])
    A = finalize(buf)
    assert A.shape == (1, 1) and A.nnz == 1 and A[0, 0] == 3.0


def test_empty_buffer_gives_zero_matrix():
    A = finalize(TripletBuffer((4, 4)))
    assert A.shape == (4, 4) and A.nnz == 0
    assert np.array_equal(A.indptr, np.zeros(5))


def test_identity_pattern():
    buf = TripletBuffer((2, 2))
    buf.add([0, 1], [0, 1], [1.0, 1.0])
    A = finalize(buf)
    assert np.array_equal(A.toarray(), np.eye(2))
    assert np.array_equal(A.indices, [0, 1])


def test_out_of_bounds_triplet_rejected():
    buf = TripletBuffer((2, 2))
    buf.add([0, 2], [0, 0], [1.0, 1.0])
    with pytest.raises(AssemblyError):
        finalize(buf)


def test_shape_mismatch_rejected():
    buf = TripletBuffer((3, 3))
    with pytest.raises(AssemblyError):
        buf.add([0, 1], [0], [1.0, 1.0])


def test_cancelling_entries_are_not_stored():
    buf = TripletBuffer((2, 2))
    buf.add([0, 0, 1], [1, 1, 1], [2.0, -2.0, 1.0])
    A = finalize(buf)
    assert A.nnz == 1 and A[1, 1] == 1.0


def test_add_block_batched():
    buf = TripletBuffer((3, 3))
    idx = np.array([[0, 1], [1, 2]])
    blk = np.array([[[1.0, -1.0], [-1.0, 1.0]]] * 2)
    buf.add_block(idx, idx, blk)
    A = finalize(buf).toarray()
    assert np.array_equal(A, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_finalize_is_order_independent(seed):
    r = np.random.default_rng(seed)
    n = 6
    m = 200
    rows = r.integers(0, n, m)
    cols = r.integers(0, n, m)
    vals = r.normal(size=m) * 10.0 ** r.integers(-8, 8, m)
    a = TripletBuffer((n, n))
    a.add(rows, cols, vals)
    perm = r.permutation(m)
    b = TripletBuffer((n, n))
    for chunk in np.array_split(perm, 7):
        b.add(rows[chunk], cols[chunk], vals[chunk])
    A, B = finalize(a), finalize(b)
    for X in (A, B):
        for i in range(n):
            seg = X.indices[X.indptr[i]:X.indptr[i + 1]]
            assert np.all(np.diff(seg) > 0)
        assert np.all(X.data != 0)
    assert np.array_equal(A.indptr, B.indptr)
    assert np.array_equal(A.indices, B.indices)
    assert np.array_equal(A.data, B.data)


def test_identity_solve(rng):
    b = rng.normal(size=7)
    assert np.array_equal(direct_solve(sparse.eye(7, format="csr"), b), b)


def test_two_by_two_solve():
    x = direct_solve(sparse.csr_matrix([[2.0, 1.0], [1.0, 3.0]]), [3.0, 4.0])
    assert np.allclose(x, [1.0, 1.0], rtol=0, atol=1e-15)


def test_singular_system_names_unknown():
    with pytest.raises(SingularSystemError) as exc:
        direct_solve(sparse.csr_matrix([[1.0, 1.0], [1.0, 1.0]]), [1.0, 2.0])
    assert exc.value.unknown in (0, 1)


def test_zero_matrix_is_singular():
    with pytest.raises(SingularSystemError):
        direct_solve(sparse.csr_matrix((3, 3)), np.ones(3))


def test_non_square_rejected():
    with pytest.raises(AssemblyError):
        direct_solve(sparse.csr_matrix(np.ones((2, 3))), np.ones(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 80))
def test_residual_bound_on_random_systems(seed, n):
    r = np.random.default_rng(seed)
    A = sparse.random(n, n, density=0.2, random_state=r) + sparse.diags(n + r.random(n))
    b = r.normal(size=n)
    x = direct_solve(A.tocsr(), b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_zero_rhs_gives_zero():
    A = sparse.csr_matrix([[2.0, 1.0], [1.0, 3.0]])
    assert np.array_equal(direct_solve(A, np.zeros(2)), np.zeros(2))


@pytest.mark.parametrize("col", [0, 3, 7])
def test_singular_error_names_zero_column(rng, col):
    A = rng.normal(size=(8, 8))
    A[:, col] = 0.0
    with pytest.raises(SingularSystemError) as exc:
        direct_solve(sparse.csc_matrix(A), np.ones(8))
    assert exc.value.unknown == col
