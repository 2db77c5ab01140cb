"""Incomplete LDL^T factors built from random walks.

Nodes of B = P A P^T are processed in position order. For the walks started
at node k, every node of lower position is a home, so the walk records give
one row of a unit lower triangular Y and one diagonal entry of Z with
Z^{-1} Y ≈ B in the UL sense. Reversing row and column order turns that into
L D L^T ≈ rev(B): L = rev(Y)^T and D = 1 / rev(diag(Z)).

Walks of one step are never simulated: their contribution is known exactly
from the matrix row, and the first step is drawn among the higher neighbors
only. One simulated walk also yields walks for the higher-positioned nodes it
passes through (see WalkScanner), which are credited to those nodes' records
before their turn comes.
"""

# Python standard library
from dataclasses import dataclass, field
from functools import cached_property
import json
import math
import os
import time

# 3rd party imports from pypi
import numpy as np

# local imports
from .conditions import (
    AdmissionError,
    BreakdownError,
    DimensionError,
    StepCapExceeded,
    err,
)
from .ordering import make_ordering
from .sparse_core import (
    Permutation,
    SparseMatrix,
    read_matrix_market,
    read_vector,
    validate_r_matrix,
    write_matrix_market,
    write_vector,
)
from .stopping import RunningStats, StoppingCriterion
from .walk_game import (
    DEFAULT_STEP_CAP,
    INITIAL_HOME,
    STREAM_PRECOND,
    StepSampler,
    build_game,
)


class PrecondJourneyRecord:
    """Counts of the walks of length two or more, per start node.
    walks[k] = M'_k, homes[k][i] = H'_ki for homes i < k (signed when the game
    carries scaling factors), returns[k] = J'_kk including the start visit.
    lengths[k] holds the running statistics of the walk lengths.
    With check_signs every credited scaling product must have magnitude 1.
    """

    def __init__(self, n, check_signs=False):
        self.n = n
        self.check_signs = check_signs
        self.walks = [0] * n
        self.homes = [dict() for _ in range(n)]
        self.returns = [0.0] * n
        self.lengths = [RunningStats() for _ in range(n)]

    def accumulate_walk(self, start, end, self_returns=0.0, length=2, sign=1.0):
        """Credit one walk from start that stopped at end.
        @param self_returns <float>:
            Signed number of returns to start after the first visit
        @param length <int>:
            Steps taken; one-step walks are accounted for exactly elsewhere
        @param sign <float>:
            Product of scaling factors along the walk when it reached end
        """
        if length < 2:
            raise ValueError(
                f"Walk from {start} has length {length}; "
                "only walks of two or more steps are recorded"
            )
        if end >= start:
            raise ValueError(
                f"Walk from {start} ended at {end}, which is not one of its homes"
            )
        if self.check_signs and abs(sign) != 1.0:
            raise BreakdownError(
                f"Walk from {start} to {end} carries a scaling product of "
                f"magnitude {abs(sign)}; sign-scaling walks must keep magnitude 1"
            )
        self.walks[start] += 1
        if end != INITIAL_HOME:
            homes = self.homes[start]
            homes[end] = homes.get(end, 0.0) + sign
        self.returns[start] += 1.0 + self_returns
        self.lengths[start].push(length)

    def total_walks(self):
        return sum(self.walks)

    def y_matrix(self, B):
        """Unit lower triangular Y assembled from this record and the rows of B."""
        rows, cols, vals = [], [], []
        for k in range(self.n):
            y_cols, y_vals, _ = finalize_row(k, self, *B.row(k))
            rows.extend([k] * (len(y_cols) + 1))
            cols.extend(y_cols + [k])
            vals.extend(y_vals + [1.0])
        return SparseMatrix.from_triplets(self.n, rows, cols, vals)

    def z_diagonal(self, B):
        """diag(Z) assembled from this record and the rows of B."""
        return np.array([finalize_row(k, self, *B.row(k))[2] for k in range(self.n)])


def finalize_row(k, record, cols, vals):
    """Row k of Y and the entry Z_kk.
    With q = Σ_{j>k} |B_kj / B_kk| the probability that a walk makes more
    than one step:
        Y_ki = B_ki / B_kk - q·H'_ki / M'_k        (i < k)
        Z_kk = (1 + q·(J'_kk / M'_k - 1)) / B_kk
    Both are exact when k has no higher neighbor (q = 0).
    @param cols, vals <np.ndarray>:
        Row k of B
    @return (y_cols, y_vals, z_kk) <tuple[list[int], list[float], float]>
    """
    cols = cols.tolist() if hasattr(cols, "tolist") else list(cols)
    vals = vals.tolist() if hasattr(vals, "tolist") else list(vals)
    pivot = vals[cols.index(k)]
    entries = {}
    higher = []
    for j, value in zip(cols, vals):
        if j < k:
            entries[j] = value / pivot
        elif j > k:
            higher.append(abs(value / pivot))
    q = sum(higher)
    if q > 0:
        walks = record.walks[k]
        if walks == 0:
            raise BreakdownError(
                f"No walks of two or more steps were recorded for node {k}"
            )
        for i, count in record.homes[k].items():
            entries[i] = entries.get(i, 0.0) - q * count / walks
        z_kk = (1.0 + q * (record.returns[k] / walks - 1.0)) / pivot
    else:
        z_kk = 1.0 / pivot
    y_cols = sorted(i for i, value in entries.items() if value != 0.0)
    return y_cols, [entries[i] for i in y_cols], z_kk


class WalkScanner:
    """Streaming stack scan of one simulated walk.

    Every node pushed on the stack sits above a smaller one; when the walk
    steps to a node lower than the top, the walk segment that began at the
    top has reached one of the top's homes and is credited to the top's record
    (unless it was a single step). Segments credited to the same node never
    overlap. The walk itself ends when the start node is popped.
    """

    __slots__ = (
        "record",
        "reuse",
        "step",
        "_nodes",
        "_steps",
        "_signs",
        "_returns",
        "segments",
    )

    def __init__(self, start, record, reuse=True, audit=False):
        self.record = record
        self.reuse = reuse
        self.step = 0
        self._nodes = [start]
        self._steps = [0]
        self._signs = [1.0]
        self._returns = [0.0]
        self.segments = [] if audit else None

    def advance(self, node, sign=1.0):
        """Feed the next node (INITIAL_HOME when the walker leaves the graph)
        and the product of scaling factors on arrival. Returns True once the
        walk has reached a home of its start node."""
        self.step += 1
        step = self.step
        nodes, steps, signs, returns = self._nodes, self._steps, self._signs, self._returns
        while nodes and node < nodes[-1]:
            top = nodes.pop()
            top_step = steps.pop()
            push_sign = signs.pop()
            top_returns = returns.pop()
            if step > top_step + 1:
                self.record.accumulate_walk(
                    top, node, top_returns, step - top_step, sign * push_sign
                )
                if self.segments is not None:
                    self.segments.append((top, node, top_step, step))
        if not nodes:
            return True
        top = nodes[-1]
        if node > top:
            if self.reuse:
                nodes.append(node)
                steps.append(step)
                signs.append(sign)
                returns.append(0.0)
        elif node == top:
            returns[-1] += sign * signs[-1]
        return False


def extract_reused_walks(sequence, record=None, reuse=True):
    """Run the stack scan over a complete node sequence.
    @param sequence <list[int]>:
        Walk from sequence[0]; it should end at a home of sequence[0]
    @return segments <list[tuple]>:
        (start, end, first_step, last_step) of every credited walk, in the
        order they were credited
    """
    sequence = [int(v) for v in sequence]
    if record is None:
        record = PrecondJourneyRecord(max(sequence) + 1)
    scanner = WalkScanner(sequence[0], record, reuse=reuse, audit=True)
    for node in sequence[1:]:
        if scanner.advance(node):
            break
    return scanner.segments


def _simulate_walk(game, k, scanner, uniform, step_cap):
    node, sign = game.step_higher(k, uniform())
    scanner.advance(node, sign)
    step = game.step
    length = 1
    while True:
        nxt, s = step(node, uniform())
        length += 1
        if length > step_cap:
            raise StepCapExceeded(
                f"Walk from position {k} exceeded {step_cap} steps; "
                "the game may not terminate"
            )
        if nxt != INITIAL_HOME:
            sign *= s
        if scanner.advance(nxt, sign):
            return length
        node = nxt


def simulate_rows(
    game,
    stop,
    seed=0,
    tag=STREAM_PRECOND,
    *,
    reuse=True,
    step_cap=DEFAULT_STEP_CAP,
    audit=False,
    verbose=False,
):
    """Launch walks from every node, in position order, until the stopping
    rule on the walk lengths holds. Nodes without higher neighbors need no walks.
    Sign-scaling games, and every game under audit, check that each credited
    scaling product has magnitude 1.
    @return (record, simulated, segments) <tuple>:
        The journey record, the number of simulated walks and, with audit,
        every credited segment as (simulation, start, end, first_step, last_step)
    """
    record = PrecondJourneyRecord(game.n, check_signs=audit or game.scaled)
    masses = game.higher_mass
    simulated = 0
    segments = [] if audit else None
    for k in range(game.n):
        if masses[k] == 0:
            continue
        uniform = StepSampler.for_node(seed, tag, k).uniform
        stats = record.lengths[k]
        while not stop.satisfied(stats):
            scanner = WalkScanner(k, record, reuse=reuse, audit=audit)
            _simulate_walk(game, k, scanner, uniform, step_cap)
            if audit:
                segments.extend((simulated,) + segment for segment in scanner.segments)
            simulated += 1
        if verbose and (k + 1) % 10000 == 0:
            err(f"walks done for {k + 1}/{game.n} rows ({simulated} simulated)")
    return record, simulated, segments


@dataclass(frozen=True, eq=False)
class IncompleteLdl:
    """L D L^T ≈ A permuted by the reverse of ordering.
    @param lower <SparseMatrix>:
        Unit lower triangular factor (the unit diagonal is stored)
    @param diagonal <np.ndarray>:
        D, positive
    @param ordering <Permutation>:
        Processing order the factor was built with
    @param metadata <dict>:
        Method name and the parameters needed to reproduce the build
    """

    lower: SparseMatrix
    diagonal: np.ndarray
    ordering: Permutation
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower.n != len(self.diagonal) or self.lower.n != len(self.ordering):
            raise DimensionError("Factor, diagonal and ordering sizes differ")

    @property
    def n(self):
        return self.lower.n

    @property
    def nonzeros(self):
        """C: stored entries of L, unit diagonal included."""
        return self.lower.nnz

    @cached_property
    def system_permutation(self):
        return self.ordering.reversed()

    @cached_property
    def upper_csr(self):
        return self.lower.transpose().csr

    @classmethod
    def diagonal_only(cls, A, ordering=None):
        """L = I, D = diag(A): Jacobi scaling in factor form."""
        ordering = Permutation.identity(A.n) if ordering is None else ordering
        diagonal = ordering.reversed().apply(A.diagonal())
        identity = SparseMatrix.from_triplets(A.n, range(A.n), range(A.n), np.ones(A.n))
        return cls(identity, diagonal.astype(np.float64), ordering, {"method": "jacobi"})

    def to_dense_product(self):
        """L D L^T as a dense array in the system ordering (small matrices only)."""
        L = self.lower.toarray()
        return (L * self.diagonal) @ L.T


def assemble_ldl(n, y_rows, z_diagonal):
    """L = rev(Y)^T and D = 1 / rev(diag(Z))."""
    rows, cols, vals = list(range(n)), list(range(n)), [1.0] * n
    for k, (y_cols, y_vals) in enumerate(y_rows):
        for i, value in zip(y_cols, y_vals):
            rows.append(n - 1 - i)
            cols.append(n - 1 - k)
            vals.append(value)
    lower = SparseMatrix.from_triplets(n, rows, cols, vals)
    diagonal = np.empty(n)
    for k, z_kk in enumerate(z_diagonal):
        if not z_kk > 0 or not math.isfinite(z_kk):
            raise BreakdownError(
                f"Nonpositive diagonal estimate Z = {z_kk} at position {k}"
            )
        diagonal[n - 1 - k] = 1.0 / z_kk
    return lower, diagonal


def finalize_rows(B, record):
    """Y rows and diag(Z) for every position of B."""
    y_rows, z_diagonal = [], []
    for k in range(B.n):
        y_cols, y_vals, z_kk = finalize_row(k, record, *B.row(k))
        y_rows.append((y_cols, y_vals))
        z_diagonal.append(z_kk)
    return y_rows, z_diagonal


def build_from_game(B, game, ordering, stop, seed, *, reuse, step_cap, verbose, metadata):
    """Shared tail of the symmetric builders: walks, rows, assembly."""
    started = time.perf_counter()
    record, simulated, _ = simulate_rows(
        game, stop, seed, STREAM_PRECOND, reuse=reuse, step_cap=step_cap, verbose=verbose
    )
    y_rows, z_diagonal = finalize_rows(B, record)
    lower, diagonal = assemble_ldl(B.n, y_rows, z_diagonal)
    metadata = dict(metadata)
    metadata.update(
        {
            "seed": int(seed),
            "reuse": bool(reuse),
            "walks_simulated": int(simulated),
            "walks_recorded": int(record.total_walks()),
            "build_seconds": time.perf_counter() - started,
        }
    )
    metadata.update(stop.to_dict())
    if verbose:
        err(
            f"built L with {lower.nnz} nonzeros from {simulated} simulated walks "
            f"({record.total_walks()} recorded)"
        )
    return IncompleteLdl(lower, diagonal, ordering, metadata)


def build_preconditioner(
    A,
    ordering=None,
    stop=None,
    seed=0,
    *,
    reuse=True,
    step_cap=DEFAULT_STEP_CAP,
    verbose=False,
):
    """Stochastic incomplete LDL^T of A.
    @param A <SparseMatrix>:
        Symmetric, irreducibly diagonally dominant M-matrix
    @param ordering <Permutation>:
        Processing order, fixed before any walk is run (default: seeded random)
    @param stop <StoppingCriterion>:
        Per-node rule on the walk lengths (default delta 0.05, alpha 0.99, 20 walks)
    @param reuse <bool>:
        Credit the walks found inside each simulation to the nodes they start from
    @return precond <IncompleteLdl>
    """
    certificate = validate_r_matrix(A)
    if not certificate.valid:
        raise AdmissionError(
            "Matrix is not an irreducibly diagonally dominant symmetric M-matrix; "
            f"failed checks: {', '.join(certificate.failures())}"
        )
    ordering = make_ordering(A, "random", seed) if ordering is None else ordering
    stop = StoppingCriterion() if stop is None else stop
    B = A.permute(ordering)
    game = build_game(B)
    return build_from_game(
        B,
        game,
        ordering,
        stop,
        seed,
        reuse=reuse,
        step_cap=step_cap,
        verbose=verbose,
        metadata={"method": "stochastic"},
    )


def save_preconditioner(precond, directory):
    """Write L.mtx, D.mtx and precond.json into directory."""
    os.makedirs(directory, exist_ok=True)
    write_matrix_market(precond.lower, os.path.join(directory, "L.mtx"))
    write_vector(precond.diagonal, os.path.join(directory, "D.mtx"))
    sidecar = dict(precond.metadata)
    sidecar["ordering"] = precond.ordering.inverse.tolist()
    with open(os.path.join(directory, "precond.json"), "w") as fh:
        json.dump(sidecar, fh, indent=4)


def load_preconditioner(directory):
    """Inverse of save_preconditioner()."""
    with open(os.path.join(directory, "precond.json"), "r") as fh:
        sidecar = json.load(fh)
    ordering = Permutation.from_order(sidecar.pop("ordering"))
    lower = read_matrix_market(os.path.join(directory, "L.mtx"))
    diagonal = read_vector(os.path.join(directory, "D.mtx"), n=lower.n)
    return IncompleteLdl(lower, diagonal, ordering, sidecar)
