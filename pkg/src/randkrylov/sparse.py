"""Compressed-row sparse matrices, Matrix Market I/O and graph Laplacians.

The Krylov drivers touch A only through :meth:`SparseMatrix.matvec`, which
reports one application to the active :mod:`~randkrylov.counters`.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .counters import tally
from .errors import DimensionMismatch, NonSquareError, ParseError

__all__ = [
    "SparseMatrix",
    "matvec",
    "read_matrix_market",
    "write_matrix_market",
    "graph_laplacian",
]


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square real CSR matrix.

    Construct with :meth:`from_scipy`, :meth:`from_dense` or
    :meth:`from_arrays`; the arrays are made read-only.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    _csr: scipy.sparse.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.n)
        row_ptr = np.asarray(self.row_ptr, dtype=np.int64)
        col_idx = np.asarray(self.col_idx, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if row_ptr.shape != (n + 1,) or row_ptr[0] != 0 or np.any(np.diff(row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing of length n+1 starting at 0")
        if col_idx.shape != values.shape or row_ptr[-1] != values.size:
            raise ValueError("col_idx/values must have row_ptr[-1] entries")
        if col_idx.size and (col_idx.min() < 0 or col_idx.max() >= n):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite matrix entry")
        for a in (row_ptr, col_idx, values):
            a.setflags(write=False)
        csr = scipy.sparse.csr_matrix((values, col_idx, row_ptr), shape=(n, n))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_csr", csr)

    @classmethod
    def from_arrays(cls, n, row_ptr, col_idx, values):
        return cls(n, row_ptr, col_idx, values)

    @classmethod
    def from_scipy(cls, M):
        M = scipy.sparse.csr_matrix(M, dtype=np.float64)
        if M.shape[0] != M.shape[1]:
            raise NonSquareError(f"matrix is {M.shape[0]}x{M.shape[1]}")
        M.sum_duplicates()
        M.sort_indices()
        return cls(M.shape[0], M.indptr, M.indices, M.data)

    @classmethod
    def from_dense(cls, D):
        return cls.from_scipy(scipy.sparse.csr_matrix(np.asarray(D, dtype=np.float64)))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self):
        return int(self.values.size)

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"matvec expects a vector of length {self.n}, got {x.shape}")
        tally(matvecs=1)
        return self._csr @ x

    __matmul__ = matvec

    def norm1(self):
        """Maximum absolute column sum."""
        if self.nnz == 0:
            return 0.0
        return float(np.max(np.bincount(self.col_idx, np.abs(self.values), minlength=self.n)))

    def to_scipy(self):
        return self._csr.copy()

    def to_dense(self):
        return self._csr.toarray()

    def scaled(self, alpha):
        return SparseMatrix(self.n, self.row_ptr, self.col_idx, alpha * self.values)

    def is_symmetric(self):
        diff = self._csr - self._csr.T
        return diff.nnz == 0 or not np.any(diff.data)


def matvec(A, x):
    """Return ``A @ x`` and count one application of A."""
    return A.matvec(x)


_MM_SYMMETRY = ("general", "symmetric")
_MM_FIELDS = ("real", "integer")


def read_matrix_market(path):
    """Read a square real Matrix Market coordinate file.

    Symmetric storage is expanded, indices are converted to 0-based and
    duplicate entries are summed.

    Raises
    ------
    ParseError
        Malformed header, size line or entry; carries the 1-based line number.
    NonSquareError
        The declared matrix is not square.
    """
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)

    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise ParseError("expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", 1)
    fmt, fld, sym = (h.lower() for h in header[2:])
    if fmt != "coordinate":
        raise ParseError(f"unsupported format {fmt!r}", 1)
    if fld not in _MM_FIELDS:
        raise ParseError(f"unsupported field {fld!r}", 1)
    if sym not in _MM_SYMMETRY:
        raise ParseError(f"unsupported symmetry {sym!r}", 1)

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        try:
            size = tuple(int(p) for p in parts)
        except ValueError:
            raise ParseError(f"bad size line {text!r}", lineno) from None
        if len(size) != 3 or min(size) < 0:
            raise ParseError(f"bad size line {text!r}", lineno)
        break
    if size is None:
        raise ParseError("missing size line", lineno)
    nrows, ncols, nnz = size
    if nrows != ncols:
        raise NonSquareError(f"matrix is {nrows}x{ncols}")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    k = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        if k >= nnz:
            raise ParseError("more entries than declared", lineno)
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'row col value', got {text!r}", lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse entry {text!r}", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"index ({i}, {j}) out of range", lineno)
        if not np.isfinite(v):
            raise ParseError("non-finite value", lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise ParseError(f"declared {nnz} entries, found {k}", len(lines))

    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    # coo -> csr sums duplicates
    M = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols)).tocsr()
    return SparseMatrix.from_scipy(M)


def write_matrix_market(A, path, comment=None):
    """Write ``A`` as a general real coordinate file (17 significant digits).

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_mm(A, path, comment)
        return
    with open(path, "w") as fh:
        _write_mm(A, fh, comment)


def _write_mm(A, fh, comment):
    rows = np.repeat(np.arange(A.n), np.diff(A.row_ptr))
    fh.write("%%MatrixMarket matrix coordinate real general\n")
    if comment:
        for line in str(comment).splitlines():
            fh.write(f"% {line}\n")
    fh.write(f"{A.n} {A.n} {A.nnz}\n")
    for i, j, v in zip(rows, A.col_idx, A.values):
        fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def graph_laplacian(A):
    """Out-degree graph Laplacian ``L = D - Adj``.

    Off-diagonal entries of ``A`` are edge weights (must be nonnegative);
    the diagonal is ignored. ``D`` holds the row sums of ``Adj``, so
    ``L @ ones == 0``.
    """
    M = A.to_scipy().tocoo()
    off = M.row != M.col
    r, c, w = M.row[off], M.col[off], M.data[off]
    if np.any(w < 0):
        raise ValueError("adjacency weights must be nonnegative")
    adj = scipy.sparse.csr_matrix((w, (r, c)), shape=A.shape)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    L = scipy.sparse.diags(deg) - adj
    L = scipy.sparse.csr_matrix(L)
    L.eliminate_zeros()
    return SparseMatrix.from_scipy(L)
