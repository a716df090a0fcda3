"""Sparse assembly buffers and the direct solver used by the FE modules."""

import logging

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

logger = logging.getLogger(__name__)

PIVOT_RTOL = 1e-14
RESIDUAL_RTOL = 1e-10


class AssemblyError(ValueError):
    pass


class SingularSystemError(RuntimeError):
    """Raised when LU factorisation meets a (numerically) zero pivot.

    Attributes
    ----------
    unknown : int or None
        Index of the unknown whose pivot vanished, when it can be identified.
    """

    def __init__(self, message, unknown=None):
        super().__init__(message)
        self.unknown = unknown


class TripletBuffer:
    """Accumulates (row, col, value) contributions from element loops.

    Contributions are stored in chunks so that vectorised element kernels can
    push whole arrays at once.
    """

    def __init__(self, shape):
        self.shape = (int(shape[0]), int(shape[1]))
        self._rows = []
        self._cols = []
        self._vals = []

    def add(self, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise AssemblyError("row and column index arrays differ in shape")
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        rows = rows.ravel()
        cols = cols.ravel()
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(vals.copy())

    def add_block(self, rows, cols, block):
        """Add a dense local block ``block[..., i, j]`` at ``(rows[..., i], cols[..., j])``."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        block = np.asarray(block, dtype=float)
        r = np.broadcast_to(rows[..., :, None], block.shape)
        c = np.broadcast_to(cols[..., None, :], block.shape)
        self.add(r, c, block)

    def __len__(self):
        return sum(len(r) for r in self._rows)

    def triplets(self):
        if not self._rows:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0)
        return (np.concatenate(self._rows), np.concatenate(self._cols),
                np.concatenate(self._vals))


def finalize(buffer):
    """Sum duplicate contributions and return a CSR matrix.

    The result has sorted, strictly increasing column indices per row and no
    stored zeros.
    """
    rows, cols, vals = buffer.triplets()
    m, n = buffer.shape
    if rows.size:
        bad = (rows < 0) | (rows >= m) | (cols < 0) | (cols >= n)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise AssemblyError(
                f"triplet ({rows[k]}, {cols[k]}) outside matrix of shape {buffer.shape}")
    # lexicographic ordering makes the summation order independent of the
    # order in which contributions were pushed
    order = _canonical_order(rows, cols, vals, n)
    A = sparse.coo_matrix((vals[order], (rows[order], cols[order])), shape=(m, n)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def _canonical_order(rows, cols, vals, n):
    """Permutation sorting triplets by (row, col, value)."""
    rank = np.empty(vals.size, dtype=np.int64)
    rank[np.argsort(vals)] = np.arange(vals.size)
    kmax = (int(rows.max()) + 1) * n if rows.size else 0
    if kmax * max(vals.size, 1) >= 2 ** 62:
        return np.lexsort((vals, cols, rows))
    # one packed integer key is much cheaper to sort than three keys
    key = (rows.astype(np.int64) * n + cols) * vals.size + rank
    return np.argsort(key)


def _small_pivots(lu, scale):
    """Unknowns (columns of A) whose LU pivot is below the relative tolerance."""
    pivots = np.abs(lu.U.diagonal())
    # column k of A Pc is column argsort(perm_c)[k] of A
    return np.argsort(lu.perm_c)[np.flatnonzero(pivots < PIVOT_RTOL * scale)]


def _locate_zero_pivot(A, scale):
    """Name the unknown of an exactly singular matrix via a shifted factorisation."""
    n = A.shape[0]
    shift = 0.1 * PIVOT_RTOL * scale
    try:
        lu = spla.splu(A + shift * sparse.eye(n, format="csc"), permc_spec="COLAMD",
                       diag_pivot_thresh=1.0)
    except RuntimeError:
        return None
    small = _small_pivots(lu, scale)
    return int(small[0]) if small.size else None


def direct_solve(A, b, refine=2):
    """Solve ``A x = b`` by sparse LU with partial pivoting.

    Parameters
    ----------
    A : sparse matrix, shape (n, n)
    b : array_like, shape (n,)
    refine : int
        Maximum number of iterative-refinement sweeps used to bring the
        relative residual below ``RESIDUAL_RTOL``.

    Raises
    ------
    SingularSystemError
        If a pivot falls below ``PIVOT_RTOL * max|A|``.
    """
    A = sparse.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise AssemblyError(f"matrix must be square, got {A.shape}")
    if n == 0:
        return np.zeros(0)
    scale = abs(A).max() if A.nnz else 0.0
    if scale == 0.0:
        raise SingularSystemError("zero matrix", unknown=0)
    try:
        lu = spla.splu(A, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        unknown = _locate_zero_pivot(A, scale)
        raise SingularSystemError(f"LU factorisation failed ({exc}) at unknown {unknown}",
                                  unknown=unknown) from exc
    small = _small_pivots(lu, scale)
    if small.size:
        unknown = int(small[0])
        raise SingularSystemError(f"singular system: vanishing pivot for unknown {unknown}",
                                  unknown=unknown)

    x = lu.solve(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    for _ in range(refine):
        r = b - A @ x
        if np.linalg.norm(r) <= RESIDUAL_RTOL * bnorm:
            break
        x = x + lu.solve(r)
    res = np.linalg.norm(b - A @ x) / bnorm
    if res > RESIDUAL_RTOL:
        logger.warning("direct_solve: relative residual %.2e above %.0e", res, RESIDUAL_RTOL)
    return x
