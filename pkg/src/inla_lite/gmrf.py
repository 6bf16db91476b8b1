"""Symmetric precision matrices and their Cholesky factors.

Matrices are stored as canonical upper-triangle coordinate lists, so the
storage never carries a redundant mirror. Factorization is dense (LAPACK
``dpotrf``): at a few thousand latent variables that is faster than any
pure-Python sparse scheme, and nothing in the interface assumes density.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.linalg import lapack

from .errors import InlaError, NotPositiveDefinite

# relative pivot floor below which a matrix is treated as singular; keeps
# rank-deficient intrinsic precisions from slipping through on rounding noise
PIVOT_RTOL = 1e-13


@dataclass(frozen=True, eq=False)
class SymmetricSparseMatrix:
    """Upper-triangle store of a symmetric matrix.

    ``rows[k] <= cols[k]`` for every entry, keys are unique and sorted
    row-major. Use :func:`build` rather than the constructor.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("rows", "cols", "values"):
            getattr(self, name).setflags(write=False)
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.values, self.values[off]])
        object.__setattr__(self, "_csr", sparse.csr_matrix((v, (r, c)), shape=(self.dim, self.dim)))

    @property
    def nnz(self):
        return len(self.values)

    def to_dense(self):
        out = np.zeros((self.dim, self.dim))
        out[self.rows, self.cols] = self.values
        off = self.rows != self.cols
        out[self.cols[off], self.rows[off]] = self.values[off]
        return out

    def to_scipy(self):
        """Full (both triangles) CSR representation, built once at construction."""
        return self._csr

    def diagonal(self):
        out = np.zeros(self.dim)
        on = self.rows == self.cols
        out[self.rows[on]] = self.values[on]
        return out

    def matvec(self, v):
        return self.to_scipy() @ np.asarray(v, dtype=float)

    def scaled(self, factor):
        return SymmetricSparseMatrix(self.dim, self.rows, self.cols, self.values * float(factor))

    def __add__(self, other):
        if not isinstance(other, SymmetricSparseMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return build(
            self.dim,
            zip(
                np.concatenate([self.rows, other.rows]),
                np.concatenate([self.cols, other.cols]),
                np.concatenate([self.values, other.values]),
            ),
        )

    def __eq__(self, other):
        if not isinstance(other, SymmetricSparseMatrix):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"SymmetricSparseMatrix(dim={self.dim}, nnz={self.nnz})"


def build(dim, entries):
    """Build a symmetric matrix from ``(row, col, value)`` triples.

    Lower-triangle keys are mirrored into the upper triangle and duplicate
    keys are summed.
    """
    dim = int(dim)
    if dim < 1:
        raise InlaError(f"dimension must be positive, got {dim}")
    entries = list(entries)
    if entries:
        arr = np.array([(int(r), int(c)) for r, c, _ in entries], dtype=np.int64)
        vals = np.array([float(v) for _, _, v in entries])
    else:
        arr = np.zeros((0, 2), dtype=np.int64)
        vals = np.zeros(0)
    if arr.size and (arr.min() < 0 or arr.max() >= dim):
        bad = arr[(arr < 0).any(axis=1) | (arr >= dim).any(axis=1)][0]
        raise InlaError(f"entry ({bad[0]}, {bad[1]}) out of range for dimension {dim}")
    r = np.minimum(arr[:, 0], arr[:, 1])
    c = np.maximum(arr[:, 0], arr[:, 1])
    key = r * dim + c
    uniq, inverse = np.unique(key, return_inverse=True)
    summed = np.zeros(len(uniq))
    np.add.at(summed, inverse, vals)
    return SymmetricSparseMatrix(dim, uniq // dim, uniq % dim, summed)


def from_dense(a, tol=0.0):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InlaError(f"expected a square matrix, got shape {a.shape}")
    r, c = np.nonzero(np.triu(np.abs(a) > tol))
    return SymmetricSparseMatrix(a.shape[0], r.astype(np.int64), c.astype(np.int64), a[r, c].copy())


def block_diag(blocks):
    """Block-diagonal assembly of symmetric matrices."""
    rows, cols, vals = [], [], []
    offset = 0
    for b in blocks:
        rows.append(b.rows + offset)
        cols.append(b.cols + offset)
        vals.append(b.values)
        offset += b.dim
    return SymmetricSparseMatrix(
        offset,
        np.concatenate(rows).astype(np.int64),
        np.concatenate(cols).astype(np.int64),
        np.concatenate(vals),
    )


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T == M + jitter * I``."""

    source_dim: int
    lower: np.ndarray
    log_det: float
    jitter: float = 0.0

    def __post_init__(self):
        self.lower.setflags(write=False)


def _as_dense(m):
    if isinstance(m, SymmetricSparseMatrix):
        return m.to_dense()
    if sparse.issparse(m):
        return m.toarray()
    return np.array(m, dtype=float)


def cholesky(m, jitter=0.0):
    """Factor a symmetric matrix (``SymmetricSparseMatrix``, sparse or dense).

    Raises :class:`NotPositiveDefinite` naming the 0-based failing pivot.
    """
    if jitter < 0:
        raise InlaError("jitter must be non-negative")
    a = _as_dense(m)
    n = a.shape[0]
    if jitter:
        a[np.diag_indices(n)] += jitter
    scale = np.max(np.abs(np.diag(a))) if n else 0.0
    c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise InlaError(f"dpotrf argument error {info}")
    d = np.diag(c)
    small = np.nonzero(d * d <= PIVOT_RTOL * scale)[0]
    if small.size:
        raise NotPositiveDefinite(int(small[0]))
    return CholeskyFactor(n, c, float(2.0 * np.sum(np.log(d))), float(jitter))


def solve(f, b):
    """Solve ``(M + jitter I) x = b``; ``b`` may be a vector or a matrix of columns."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.source_dim:
        raise InlaError(f"right-hand side has length {b.shape[0]}, factor has dimension {f.source_dim}")
    return linalg.cho_solve((f.lower, True), b)


def inverse_lower(f):
    return linalg.solve_triangular(f.lower, np.eye(f.source_dim), lower=True)


def covariance(f):
    """Dense inverse of the factored matrix."""
    li = inverse_lower(f)
    return li.T @ li


def marginal_variances(f):
    li = inverse_lower(f)
    return np.einsum("ki,ki->i", li, li)


@dataclass(frozen=True, eq=False)
class ConditionalStats:
    anchor_index: int
    a: np.ndarray
    conditional_variances: np.ndarray
    sd: np.ndarray

    def conditional_mean(self, xi, mu=None):
        """``E(x | x_i = xi)`` under the Gaussian with mean ``mu`` (default 0)."""
        mu = np.zeros(len(self.a)) if mu is None else np.asarray(mu, dtype=float)
        i = self.anchor_index
        return mu + self.a * self.sd / self.sd[i] * (xi - mu[i])


def conditional_stats(f, i):
    """Correlations of every component with component ``i`` and the
    variances of each component conditional on ``x_i``.
    """
    i = int(i)
    if not 0 <= i < f.source_dim:
        raise InlaError(f"anchor index {i} out of range for dimension {f.source_dim}")
    e = np.zeros(f.source_dim)
    e[i] = 1.0
    col = solve(f, e)
    var = marginal_variances(f)
    a = col / np.sqrt(var * var[i])
    a[i] = 1.0
    a = np.clip(a, -1.0, 1.0)
    return ConditionalStats(i, a, var * (1.0 - a * a), np.sqrt(var))
