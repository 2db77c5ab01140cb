"""Sparse matrix storage, validation, reversal, benchmark generation and file I/O.

Every matrix in WALDO (the system A, the factors L and U, the journey-record
registers Y) is carried by a SparseMatrix: an immutable compressed-row matrix
with sorted column indices and no explicitly stored zeros.
"""

# Python standard library
from dataclasses import dataclass
import os

# 3rd party imports from pypi
import numpy as np
import scipy.io
import scipy.sparse
from scipy.sparse.csgraph import connected_components

# local imports
from .conditions import DimensionError, MatrixMarketError

_MM_FIELDS = ("real", "integer", "pattern")
_MM_SYMMETRIES = ("general", "symmetric")


def _canonical(csr):
    """float64, summed duplicates, no stored zeros, sorted indices."""
    csr = scipy.sparse.csr_matrix(csr, dtype=np.float64, copy=True)
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    return csr


def _indicator(csr):
    """Same structure with every stored value set to 1."""
    ones = scipy.sparse.csr_matrix(csr, copy=True)
    ones.data = np.ones_like(ones.data, dtype=np.int8)
    return ones


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square compressed-row matrix.
    @param csr <scipy.sparse.csr_matrix>:
        Canonical storage, see _canonical()
    @param symmetry_hint <bool>:
        Set when the matrix is known to be symmetric (controls how it is written)
    """

    csr: scipy.sparse.csr_matrix
    symmetry_hint: bool = False

    @classmethod
    def from_scipy(cls, matrix, symmetry_hint=False):
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"Matrix must be square, got shape {matrix.shape}")
        return cls(_canonical(matrix), bool(symmetry_hint))

    @classmethod
    def from_dense(cls, array, symmetry_hint=False):
        array = np.atleast_2d(np.asarray(array, dtype=np.float64))
        return cls.from_scipy(scipy.sparse.csr_matrix(array), symmetry_hint)

    @classmethod
    def from_triplets(cls, n, rows, cols, values, symmetry_hint=False):
        coo = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(n, n))
        return cls.from_scipy(coo.tocsr(), symmetry_hint)

    @property
    def n(self):
        return self.csr.shape[0]

    @property
    def row_ptr(self):
        return self.csr.indptr

    @property
    def col_idx(self):
        return self.csr.indices

    @property
    def values(self):
        return self.csr.data

    @property
    def nnz(self):
        return int(self.csr.nnz)

    def row(self, i):
        """Column indices and values stored in row i (views into the storage)."""
        start, end = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[start:end], self.csr.data[start:end]

    def diagonal(self):
        return self.csr.diagonal()

    def transpose(self):
        return SparseMatrix(_canonical(self.csr.T), self.symmetry_hint)

    def permute(self, perm):
        """Symmetric permutation P A P^T: entry (p, q) of the result is
        A[perm.inverse[p], perm.inverse[q]]."""
        if len(perm) != self.n:
            raise DimensionError(
                f"Permutation of length {len(perm)} applied to a {self.n}x{self.n} matrix"
            )
        inv = perm.inverse
        return SparseMatrix(_canonical(self.csr[inv][:, inv]), self.symmetry_hint)

    def lower(self, strict=False):
        """Lower triangle (including the diagonal unless strict)."""
        k = -1 if strict else 0
        return SparseMatrix(_canonical(scipy.sparse.tril(self.csr, k=k)))

    def matvec(self, x):
        return self.csr @ x

    def toarray(self):
        return self.csr.toarray()

    def equals(self, other, tol=0.0):
        """Same shape and entries within an absolute tolerance."""
        if self.n != other.n:
            return False
        diff = abs(self.csr - other.csr)
        return diff.nnz == 0 or float(diff.max()) <= tol

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class Permutation:
    """Relabeling of nodes.
    @param forward <np.ndarray>:
        forward[node] = position
    @param inverse <np.ndarray>:
        inverse[position] = node
    """

    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        if len(self.forward) != len(self.inverse) or not np.array_equal(
            self.forward[self.inverse], np.arange(len(self.inverse))
        ):
            raise ValueError("forward and inverse maps are not inverse to each other")

    @classmethod
    def from_order(cls, order):
        """Build from a processing order (the node placed at each position)."""
        inverse = np.asarray(order, dtype=np.int64)
        n = len(inverse)
        if n and (
            inverse.min() < 0
            or inverse.max() >= n
            or len(np.unique(inverse)) != n
        ):
            raise ValueError("order is not a permutation of 0..n-1")
        forward = np.empty(n, dtype=np.int64)
        forward[inverse] = np.arange(n, dtype=np.int64)
        return cls(forward, inverse)

    @classmethod
    def identity(cls, n):
        return cls.from_order(np.arange(n))

    def __len__(self):
        return len(self.inverse)

    def reversed(self):
        """Permutation that places the nodes in the opposite order; permuting by
        it is the same as permuting by self and then applying rev."""
        return Permutation.from_order(self.inverse[::-1])

    def apply(self, x):
        """Node-indexed vector to position-indexed vector."""
        return np.asarray(x)[self.inverse]

    def undo(self, y):
        """Position-indexed vector back to node indexing."""
        y = np.asarray(y)
        x = np.empty_like(y)
        x[self.inverse] = y
        return x

    def equals(self, other):
        return np.array_equal(self.inverse, other.inverse)


@dataclass(frozen=True)
class RMatrixCertificate:
    """Outcome of validate_r_matrix(); valid only when every check passed."""

    is_symmetric: bool
    diag_positive: bool
    offdiag_nonpositive: bool
    row_dominant: bool
    irreducible: bool
    strictly_dominant_rows: tuple

    @property
    def valid(self):
        return all(
            (
                self.is_symmetric,
                self.diag_positive,
                self.offdiag_nonpositive,
                self.row_dominant,
                self.irreducible,
            )
        )

    def failures(self):
        """Names of the checks that did not pass."""
        checks = (
            "is_symmetric",
            "diag_positive",
            "offdiag_nonpositive",
            "row_dominant",
            "irreducible",
        )
        return [name for name in checks if not getattr(self, name)]


def offdiagonal_abs_sums(A, axis=1):
    """Σ_{j≠i} |A_ij| per row (axis=1) or per column (axis=0)."""
    absolute = abs(A.csr)
    totals = np.asarray(absolute.sum(axis=axis)).ravel()
    return totals - np.abs(A.diagonal())


def dominance_margins(A, axis=1, rtol=1e-12):
    """Per-row (or per-column) dominance flags.
    @return (dominant, strict) <tuple[np.ndarray, np.ndarray]>:
        dominant[i]: |A_ii| >= Σ_{j≠i}|A_ij|, strict[i]: strictly greater
    """
    diag = np.abs(A.diagonal())
    margin = diag - offdiagonal_abs_sums(A, axis=axis)
    slack = rtol * np.maximum(diag, 1.0)
    return margin >= -slack, margin > slack


def is_connected(A, connection="weak"):
    """Single connected component of the matrix graph."""
    if A.n == 0:
        return False
    count, _ = connected_components(A.csr, directed=True, connection=connection)
    return count == 1


def validate_r_matrix(A):
    """Check whether A is a symmetric, irreducibly diagonally dominant M-matrix.
    Never raises; the certificate reports every check.
    @param A <SparseMatrix>:
        Square matrix to check
    @return certificate <RMatrixCertificate>
    """
    diag = A.diagonal()
    scale = float(np.max(np.abs(A.values))) if A.nnz else 0.0

    asym = abs(A.csr - A.csr.T)
    is_symmetric = asym.nnz == 0 or float(asym.max()) <= 1e-14 * scale

    offdiag = scipy.sparse.triu(A.csr, k=1).data, scipy.sparse.tril(A.csr, k=-1).data
    offdiag_nonpositive = all(bool(np.all(part <= 0)) for part in offdiag)

    dominant, strict = dominance_margins(A)
    strictly_dominant_rows = tuple(int(i) for i in np.flatnonzero(strict))

    return RMatrixCertificate(
        is_symmetric=bool(is_symmetric),
        diag_positive=bool(A.n > 0 and np.all(diag > 0)),
        offdiag_nonpositive=offdiag_nonpositive,
        row_dominant=bool(np.all(dominant)) and len(strictly_dominant_rows) > 0,
        irreducible=is_connected(A, connection="weak"),
        strictly_dominant_rows=strictly_dominant_rows,
    )


def rev_matrix(A):
    """rev(A)_{i,j} = A_{n-1-i, n-1-j}."""
    return A.permute(Permutation.identity(A.n).reversed())


def rev_vector(x):
    """rev(x)_i = x_{n-1-i}."""
    return np.array(x, copy=True)[::-1].copy()


def gen_laplace3d(nx, ny, nz):
    """7-point finite-difference Laplacian on an nx-by-ny-by-nz grid with
    Dirichlet boundaries. Node (x, y, z) has index x + nx*(y + ny*z).
    @return A <SparseMatrix>:
        Diagonal 6, -1 between grid neighbors
    """
    extents = (nx, ny, nz)
    if any(int(e) != e or e < 1 for e in extents):
        raise DimensionError(f"Grid extents must be positive integers, got {extents}")

    def second_difference(m):
        return scipy.sparse.diags(
            [-np.ones(m - 1), 2.0 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1], shape=(m, m)
        )

    ix, iy, iz = (scipy.sparse.identity(int(e)) for e in extents)
    tx, ty, tz = (second_difference(int(e)) for e in extents)
    A = (
        scipy.sparse.kron(iz, scipy.sparse.kron(iy, tx))
        + scipy.sparse.kron(iz, scipy.sparse.kron(ty, ix))
        + scipy.sparse.kron(tz, scipy.sparse.kron(iy, ix))
    )
    return SparseMatrix.from_scipy(A.tocsr(), symmetry_hint=True)


def _scan_header(path):
    """Validate the banner and size line of a Matrix Market file.
    @return header <dict>:
        format, field, symmetry and the size tuple
    """
    with open(path, "r") as fh:
        banner = fh.readline()
        tokens = banner.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
            raise MatrixMarketError(
                "missing '%%MatrixMarket' banner", lineno=1, path=path
            )
        _, obj, fmt, field, symmetry = tokens
        if obj != "matrix" or fmt not in ("coordinate", "array"):
            raise MatrixMarketError(
                f"unsupported object/format '{obj} {fmt}'", lineno=1, path=path
            )
        if field not in _MM_FIELDS:
            raise MatrixMarketError(f"unsupported field '{field}'", lineno=1, path=path)
        if symmetry not in _MM_SYMMETRIES:
            raise MatrixMarketError(
                f"unsupported symmetry '{symmetry}'", lineno=1, path=path
            )
        lineno = 1
        for line in fh:
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            try:
                size = tuple(int(token) for token in stripped.split())
            except ValueError:
                raise MatrixMarketError(
                    f"malformed size line '{stripped}'", lineno=lineno, path=path
                )
            expected = 3 if fmt == "coordinate" else 2
            if len(size) != expected or min(size) < 0:
                raise MatrixMarketError(
                    f"size line must hold {expected} nonnegative integers",
                    lineno=lineno,
                    path=path,
                )
            break
        else:
            raise MatrixMarketError("missing size line", lineno=lineno, path=path)
    return {"format": fmt, "field": field, "symmetry": symmetry, "size": size}


def _mmread(path):
    try:
        return scipy.io.mmread(path)
    except (ValueError, IndexError) as e:
        raise MatrixMarketError(f"malformed entries: {e}", path=path) from e


def read_matrix_market(path):
    """Read a real coordinate Matrix Market file (general or symmetric). A
    symmetric file lists the lower triangle only; the reader mirrors it.
    @param path <str>:
        File to read
    @return A <SparseMatrix>
    """
    path = os.fspath(path)
    header = _scan_header(path)
    if header["format"] != "coordinate":
        raise MatrixMarketError("matrices must use coordinate format", lineno=1, path=path)
    rows, cols = header["size"][:2]
    if rows != cols:
        raise DimensionError(f"{path}: matrix is {rows}x{cols}, expected square")
    matrix = scipy.sparse.csr_matrix(_mmread(path))
    return SparseMatrix.from_scipy(
        matrix, symmetry_hint=header["symmetry"] == "symmetric"
    )


def write_matrix_market(A, path, comment=""):
    """Write A as a coordinate Matrix Market file, lower triangle only when
    A.symmetry_hint is set. Values keep full double precision."""
    if A.symmetry_hint:
        symmetry, entries = "symmetric", scipy.sparse.tril(A.csr)
    else:
        symmetry, entries = "general", A.csr
    with open(os.fspath(path), "wb") as fh:
        scipy.io.mmwrite(
            fh,
            scipy.sparse.coo_matrix(entries),
            comment=comment,
            field="real",
            precision=17,
            symmetry=symmetry,
        )


def read_vector(path, n=None):
    """Read a dense vector stored as an n-by-1 Matrix Market array (or a
    coordinate file with one column)."""
    path = os.fspath(path)
    header = _scan_header(path)
    rows, cols = header["size"][:2]
    if cols != 1 and rows != 1:
        raise DimensionError(f"{path}: expected a vector, got a {rows}x{cols} matrix")
    data = _mmread(path)
    if scipy.sparse.issparse(data):
        data = data.toarray()
    vector = np.asarray(data, dtype=np.float64).ravel()
    if n is not None and len(vector) != n:
        raise DimensionError(f"{path}: vector has length {len(vector)}, expected {n}")
    return vector


def write_vector(x, path, comment=""):
    with open(os.fspath(path), "wb") as fh:
        scipy.io.mmwrite(
            fh,
            np.asarray(x, dtype=np.float64).reshape(-1, 1),
            comment=comment,
            field="real",
            precision=17,
        )


def sym_factor_pattern(A, order):
    """Exact structure of the complete L factor of P A P^T, eliminating
    positions 0, 1, ..., n-1 in turn. Eliminating a node joins its remaining
    neighbors into a clique; column k of L is the set of neighbors k still has
    when it is eliminated. Numerical cancellation is ignored.
    @param A <SparseMatrix>:
        Structurally symmetric matrix
    @param order <Permutation>:
        Elimination order
    @return pattern <SparseMatrix>:
        Lower triangular, 1.0 at every structural nonzero (diagonal included)
    """
    B = A.permute(order)
    n = B.n
    # column structures below the diagonal; merging a column into its parent
    # column is equivalent to building the elimination clique
    struct = [set() for _ in range(n)]
    for i in range(n):
        cols, _ = B.row(i)
        for j in cols:
            j = int(j)
            if j < i:
                struct[j].add(i)
            elif j > i:
                struct[i].add(j)
    rows, cols = list(range(n)), list(range(n))
    for k in range(n):
        below = struct[k]
        if not below:
            continue
        parent = min(below)
        struct[parent] |= below - {parent}
        rows.extend(below)
        cols.extend([k] * len(below))
    return SparseMatrix.from_triplets(n, rows, cols, np.ones(len(rows)))


def pattern_violations(L, pattern):
    """Positions (i, j) stored in L but absent from pattern."""
    if L.n != pattern.n:
        raise DimensionError(f"Pattern sizes differ: {L.n} vs {pattern.n}")
    stored = _indicator(L.csr)
    extra = scipy.sparse.csr_matrix(stored - stored.multiply(_indicator(pattern.csr)))
    extra.eliminate_zeros()
    extra = extra.tocoo()
    return sorted(zip(extra.row.tolist(), extra.col.tolist()))


def is_pattern_subset(L, pattern):
    return not pattern_violations(L, pattern)
