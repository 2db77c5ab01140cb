"""Classical incomplete Cholesky factorizations, in LDL^T form.

Both factor S = A permuted by ordering.reversed(), the same matrix the
walk-based builder approximates for that ordering, and return IncompleteLdl.
"""

# Python standard library
import heapq
import math
import warnings

# 3rd party imports from pypi
import numpy as np

# local imports
from .conditions import AdmissionError, BreakdownError
from .precond_builder import IncompleteLdl
from .sparse_core import Permutation, SparseMatrix, validate_r_matrix


def _prepare(A, ordering, method):
    # elimination needs no connected graph, only a symmetric dominant M-matrix
    certificate = validate_r_matrix(A)
    failures = [name for name in certificate.failures() if name != "irreducible"]
    if failures:
        raise AdmissionError(
            f"{method} expects a diagonally dominant symmetric M-matrix; "
            f"failed checks: {', '.join(failures)}"
        )
    ordering = Permutation.identity(A.n) if ordering is None else ordering
    return A.permute(ordering.reversed()), ordering


def _lower_rows(S):
    """Strictly lower part of every row as {col: value}, plus the diagonal."""
    rows = []
    for i in range(S.n):
        cols, vals = S.row(i)
        rows.append({int(j): float(v) for j, v in zip(cols, vals) if j < i})
    return rows, S.diagonal()


def _to_ldl(n, factor_rows, diagonal, ordering, metadata):
    rows, cols, vals = list(range(n)), list(range(n)), [1.0] * n
    for i, entries in enumerate(factor_rows):
        for j, value in entries.items():
            rows.append(i)
            cols.append(j)
            vals.append(value)
    lower = SparseMatrix.from_triplets(n, rows, cols, vals)
    return IncompleteLdl(lower, np.asarray(diagonal, dtype=np.float64), ordering, metadata)


def ic0(A, ordering=None):
    """IC(0): LDL^T with L restricted to the pattern of the lower triangle of S.
    L_ij D_j = S_ij - Σ_{k<j} L_ik D_k L_jk over k stored in both rows i and j.
    @return precond <IncompleteLdl>
    """
    S, ordering = _prepare(A, ordering, "IC(0)")
    n = S.n
    pattern, s_diag = _lower_rows(S)
    L = []
    D = np.empty(n)
    for i in range(n):
        row = {}
        for j in sorted(pattern[i]):
            value = pattern[i][j]
            other = L[j]
            small, large = (row, other) if len(row) <= len(other) else (other, row)
            for k, l_k in small.items():
                if k in large:
                    value -= row[k] * D[k] * other[k]
            row[j] = value / D[j]
        pivot = s_diag[i] - sum(l_ij * l_ij * D[j] for j, l_ij in row.items())
        if not pivot > 0:
            raise BreakdownError(f"IC(0) pivot {pivot} at row {i} is not positive")
        D[i] = pivot
        L.append(row)
    return _to_ldl(n, L, D, ordering, {"method": "ic0"})


def compensate_pivot(i, pivot, dropped_mass):
    """Pivot of ICT row i, with the dropped magnitude of the row added back
    when the computed pivot is not positive (diagonal compensation). Rows of
    an M-matrix never need it; it guards inputs near the admission boundary.
    """
    if pivot > 0:
        return pivot
    warnings.warn(
        f"ICT pivot at row {i} was not positive; added back {dropped_mass:.3e} "
        "of dropped magnitude to the diagonal",
        UserWarning,
    )
    pivot += dropped_mass
    if not pivot > 0:
        raise BreakdownError(f"ICT pivot {pivot} at row {i} is not positive")
    return pivot


def ict(A, ordering=None, drop_tol=1e-3, max_row_nnz=None):
    """Threshold incomplete Cholesky.
    Row i is eliminated left to right; an entry whose magnitude |L_ik D_k|
    falls below drop_tol * ||S_i||_2 is dropped, and of the survivors at most
    max_row_nnz of the largest are kept. The diagonal is always kept. When a
    pivot comes out nonpositive the dropped magnitude of its row is added
    back to it.
    @param drop_tol <float>:
        0 keeps everything (complete factorization); inf keeps nothing
    @param max_row_nnz <int>:
        None for no cap
    @return precond <IncompleteLdl>
    """
    if drop_tol < 0:
        raise ValueError(f"drop_tol must be nonnegative, got {drop_tol}")
    if max_row_nnz is not None and max_row_nnz < 0:
        raise ValueError(f"max_row_nnz must be nonnegative, got {max_row_nnz}")
    S, ordering = _prepare(A, ordering, "ICT")
    n = S.n
    lower, s_diag = _lower_rows(S)
    row_norms = np.sqrt(np.asarray(abs(S.csr).power(2).sum(axis=1)).ravel())
    L = []
    columns = [[] for _ in range(n)]  # columns[k]: (j, L_jk) for finished rows j
    D = np.empty(n)
    compensated = 0
    for i in range(n):
        threshold = drop_tol * row_norms[i] if drop_tol > 0 else 0.0
        work = dict(lower[i])
        heap = list(work)
        heapq.heapify(heap)
        kept = {}
        dropped_mass = 0.0
        while heap:
            k = heapq.heappop(heap)
            value = work.pop(k)
            if abs(value) < threshold or math.isinf(threshold):
                dropped_mass += abs(value)
                continue
            l_ik = value / D[k]
            kept[k] = l_ik
            for j, l_jk in columns[k]:
                if j >= i:
                    continue
                if j not in work:
                    work[j] = 0.0
                    heapq.heappush(heap, j)
                work[j] -= l_ik * D[k] * l_jk
        if max_row_nnz is not None and len(kept) > max_row_nnz:
            ranked = sorted(kept, key=lambda k: (-abs(kept[k] * D[k]), k))
            for k in ranked[max_row_nnz:]:
                dropped_mass += abs(kept.pop(k) * D[k])
        pivot = s_diag[i] - sum(l_ik * l_ik * D[k] for k, l_ik in kept.items())
        if not pivot > 0:
            compensated += 1
        D[i] = compensate_pivot(i, pivot, dropped_mass)
        L.append(kept)
        for k, l_ik in kept.items():
            columns[k].append((i, l_ik))
    metadata = {
        "method": "ict",
        "drop_tol": float(drop_tol),
        "max_row_nnz": max_row_nnz,
        "compensated_rows": compensated,
    }
    return _to_ldl(n, L, D, ordering, metadata)
