"""Games beyond symmetric M-matrices.

build_ldu() handles nonsymmetric M-matrices with two games, one on A and one
on A^T: walks on A give the unit upper factor, walks on A^T the unit lower
one, and the diagonal comes from the A game. build_scaled_game() admits
positive off-diagonal entries by carrying a sign factor s_ij = -1 on the
corresponding transitions; walk counters then sum products of signs.
"""

# Python standard library
from dataclasses import dataclass, field
from functools import cached_property
import json
import os
import time

# 3rd party imports from pypi
import numpy as np
import scipy.sparse
from scipy.sparse.csgraph import breadth_first_order

# local imports
from .conditions import AdmissionError, DimensionError, err
from .ordering import make_ordering
from .precond_builder import (
    assemble_ldl,
    build_from_game,
    finalize_rows,
    simulate_rows,
)
from .sparse_core import (
    Permutation,
    SparseMatrix,
    dominance_margins,
    read_matrix_market,
    read_vector,
    validate_r_matrix,
    write_matrix_market,
    write_vector,
)
from .stopping import StoppingCriterion
from .walk_game import (
    DEFAULT_STEP_CAP,
    STREAM_PRECOND,
    STREAM_PRECOND_TRANSPOSE,
    build_game,
)


@dataclass(frozen=True, eq=False)
class IncompleteLdu:
    """L D U ≈ A permuted by the reverse of ordering.
    @param lower <SparseMatrix>:
        Unit lower triangular, unit diagonal stored
    @param diagonal <np.ndarray>:
        D
    @param upper <SparseMatrix>:
        Unit upper triangular, unit diagonal stored
    @param ordering <Permutation>:
        Processing order
    """

    lower: SparseMatrix
    diagonal: np.ndarray
    upper: SparseMatrix
    ordering: Permutation
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        sizes = {self.lower.n, self.upper.n, len(self.diagonal), len(self.ordering)}
        if len(sizes) != 1:
            raise DimensionError("Factor, diagonal and ordering sizes differ")

    @property
    def n(self):
        return self.lower.n

    @property
    def nonzeros(self):
        """Stored entries of L and U, each unit diagonal counted once."""
        return self.lower.nnz + self.upper.nnz - self.n

    @cached_property
    def system_permutation(self):
        return self.ordering.reversed()

    def to_dense_product(self):
        """L D U as a dense array in the system ordering (small matrices only)."""
        return (self.lower.toarray() * self.diagonal) @ self.upper.toarray()


def _reaches_strict_rows(M, strict):
    """True when a walk on the row game of M can reach a strictly dominant
    row from every node, i.e. every walk terminates with probability one."""
    n = M.n
    if not np.any(strict):
        return False
    # reverse edges j -> i for every transition i -> j, plus a source that
    # points at the strict rows
    reverse = scipy.sparse.csr_matrix(
        (np.ones(M.nnz), M.col_idx, M.row_ptr), shape=(n, n)
    ).T.tocoo()
    sources = np.flatnonzero(strict)
    rows = np.concatenate((reverse.row, np.full(len(sources), n)))
    cols = np.concatenate((reverse.col, sources))
    graph = scipy.sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n + 1, n + 1)
    )
    reached = breadth_first_order(graph, n, directed=True, return_predecessors=False)
    return len(reached) == n + 1


def _admit_dual(A):
    """Admission rule of the dual games: positive diagonal, nonpositive
    off-diagonals, dominance by rows and by columns, and every walk of
    either game reaches a strictly dominant row or column."""
    failures = []
    if A.n == 0 or np.any(A.diagonal() <= 0):
        failures.append("diag_positive")
    offdiagonal = scipy.sparse.triu(A.csr, k=1).data, scipy.sparse.tril(A.csr, k=-1).data
    if any(np.any(part > 0) for part in offdiagonal):
        failures.append("offdiag_nonpositive")
    for axis, name, game_matrix in ((1, "row", A), (0, "column", A.transpose())):
        dominant, strict = dominance_margins(A, axis=axis)
        if not np.all(dominant):
            failures.append(f"{name}_dominant")
        elif not _reaches_strict_rows(game_matrix, strict):
            failures.append(f"{name}_chained")
    if failures:
        raise AdmissionError(
            "Matrix is not a row- and column-wise diagonally dominant M-matrix; "
            f"failed checks: {', '.join(failures)}"
        )


def build_ldu(
    A,
    ordering=None,
    stop=None,
    seed=0,
    *,
    reuse=True,
    step_cap=DEFAULT_STEP_CAP,
    verbose=False,
):
    """Stochastic incomplete LDU of a nonsymmetric M-matrix.
    U comes from the game of B = P A P^T, L from the game of B^T, D from the
    diagonal of Z of the B game. The two games use separate random streams of
    the same seed.
    @return precond <IncompleteLdu>
    """
    _admit_dual(A)
    ordering = make_ordering(A, "random", seed) if ordering is None else ordering
    stop = StoppingCriterion() if stop is None else stop
    started = time.perf_counter()
    B = A.permute(ordering)
    Bt = B.transpose()
    n = B.n

    record, simulated, _ = simulate_rows(
        build_game(B),
        stop,
        seed,
        STREAM_PRECOND,
        reuse=reuse,
        step_cap=step_cap,
        verbose=verbose,
    )
    y_rows, z_diagonal = finalize_rows(B, record)
    record_t, simulated_t, _ = simulate_rows(
        build_game(Bt),
        stop,
        seed,
        STREAM_PRECOND_TRANSPOSE,
        reuse=reuse,
        step_cap=step_cap,
        verbose=verbose,
    )
    y_rows_t, _ = finalize_rows(Bt, record_t)

    # assemble_ldl lays Y rows out as a lower factor; U is its transpose
    upper_t, diagonal = assemble_ldl(n, y_rows, z_diagonal)
    lower, _ = assemble_ldl(n, y_rows_t, np.ones(n))
    upper = upper_t.transpose()

    metadata = {
        "method": "stochastic-ldu",
        "seed": int(seed),
        "reuse": bool(reuse),
        "walks_simulated": int(simulated + simulated_t),
        "walks_recorded": int(record.total_walks() + record_t.total_walks()),
        "build_seconds": time.perf_counter() - started,
    }
    metadata.update(stop.to_dict())
    if verbose:
        err(f"built L, U with {lower.nnz} + {upper.nnz} nonzeros")
    return IncompleteLdu(lower, diagonal, upper, ordering, metadata)


def build_scaled_game(A, b=None):
    """Sign-scaling game of a matrix that may have positive off-diagonals.
    A must be diagonally dominant by rows and by columns with nonzero
    diagonal, and every walk must reach a strictly dominant row.
    @return game <WalkGame>
    """
    diagonal = A.diagonal()
    if A.n == 0 or np.any(diagonal == 0):
        raise AdmissionError("Sign-scaling game needs a nonzero diagonal")
    row_dominant, row_strict = dominance_margins(A, axis=1)
    column_dominant, _ = dominance_margins(A, axis=0)
    if not (np.all(row_dominant) and np.all(column_dominant)):
        raise AdmissionError(
            "Sign-scaling game needs row- and column-wise diagonal dominance; "
            "scaling factors of magnitude above one are not supported"
        )
    if not _reaches_strict_rows(A, row_strict):
        raise AdmissionError("Some walks of the game never reach a strictly dominant row")
    game = build_game(A, b, scaling=True)
    if not np.all(np.abs(game.scaling) == 1.0):
        raise AdmissionError("Scaling factors must have unit magnitude")
    return game


def build_scaled_preconditioner(
    A,
    ordering=None,
    stop=None,
    seed=0,
    *,
    reuse=True,
    step_cap=DEFAULT_STEP_CAP,
    verbose=False,
):
    """Stochastic incomplete LDL^T of a symmetric, diagonally dominant matrix
    whose off-diagonals may be positive. For M-matrices this reproduces
    build_preconditioner() exactly under the same seed.
    @return precond <IncompleteLdl>
    """
    certificate = validate_r_matrix(A)
    failures = [name for name in certificate.failures() if name != "offdiag_nonpositive"]
    if failures:
        raise AdmissionError(
            "Matrix is not symmetric, positive-diagonal, irreducibly diagonally "
            f"dominant; failed checks: {', '.join(failures)}"
        )
    ordering = make_ordering(A, "random", seed) if ordering is None else ordering
    stop = StoppingCriterion() if stop is None else stop
    B = A.permute(ordering)
    return build_from_game(
        B,
        build_scaled_game(B),
        ordering,
        stop,
        seed,
        reuse=reuse,
        step_cap=step_cap,
        verbose=verbose,
        metadata={"method": "stochastic-scaled"},
    )


def save_ldu(precond, directory):
    """Write L.mtx, U.mtx, D.mtx and precond.json into directory."""
    os.makedirs(directory, exist_ok=True)
    write_matrix_market(precond.lower, os.path.join(directory, "L.mtx"))
    write_matrix_market(precond.upper, os.path.join(directory, "U.mtx"))
    write_vector(precond.diagonal, os.path.join(directory, "D.mtx"))
    sidecar = dict(precond.metadata)
    sidecar["ordering"] = precond.ordering.inverse.tolist()
    with open(os.path.join(directory, "precond.json"), "w") as fh:
        json.dump(sidecar, fh, indent=4)


def load_ldu(directory):
    """Inverse of save_ldu()."""
    with open(os.path.join(directory, "precond.json"), "r") as fh:
        sidecar = json.load(fh)
    ordering = Permutation.from_order(sidecar.pop("ordering"))
    lower = read_matrix_market(os.path.join(directory, "L.mtx"))
    upper = read_matrix_market(os.path.join(directory, "U.mtx"))
    diagonal = read_vector(os.path.join(directory, "D.mtx"), n=lower.n)
    return IncompleteLdu(lower, diagonal, upper, ordering, sidecar)
