"""The random-walk game of a matrix.

Row i of A x = b is read as x_i = Σ_j p_ij s_ij x_j - m_i with
p_ij = |A_ij / A_ii|, s_ij = -sign(A_ij / A_ii) and m_i = -b_i / A_ii.
A walker at node i moves to neighbor j with probability p_ij, or leaves the
graph (the initial home, award 0) with the remaining probability.
"""

# Python standard library
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

# 3rd party imports from pypi
import numpy as np

# local imports
from .conditions import AdmissionError, DimensionError

INITIAL_HOME = -1
DEFAULT_STEP_CAP = 10**7

# Stream tags keep the random streams of different consumers apart
STREAM_ORDERING = 0
STREAM_PRECOND = 1
STREAM_PRECOND_TRANSPOSE = 2
STREAM_SOLVER = 3

_UNIFORM_BATCH = 256


class StepOutcome(NamedTuple):
    node: int
    sign: float

    @property
    def absorbed(self):
        return self.node == INITIAL_HOME


@dataclass(frozen=True, eq=False)
class WalkGame:
    """Per-node transition tables of the game, in compressed-row layout.
    Slice indptr[i]:indptr[i+1] of neighbors/probabilities/cumulative/scaling
    belongs to node i; cumulative restarts at every node.
    """

    n: int
    indptr: np.ndarray
    neighbors: np.ndarray
    probabilities: np.ndarray
    cumulative: np.ndarray
    scaling: np.ndarray
    home_escape: np.ndarray
    diagonal: np.ndarray
    motel_price: Optional[np.ndarray] = None
    scaled: bool = False

    def with_rhs(self, b):
        """Same game with motel prices m_i = -b_i / A_ii."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.n,):
            raise DimensionError(
                f"Right-hand side has shape {b.shape}, expected ({self.n},)"
            )
        return WalkGame(
            self.n,
            self.indptr,
            self.neighbors,
            self.probabilities,
            self.cumulative,
            self.scaling,
            self.home_escape,
            self.diagonal,
            -b / self.diagonal,
            self.scaled,
        )

    def out_edges(self, i):
        start, end = self.indptr[i], self.indptr[i + 1]
        return self.neighbors[start:end], self.probabilities[start:end]

    @cached_property
    def _rows(self):
        # plain lists: the walk kernels index them one element at a time
        ptr = self.indptr.tolist()
        neighbors = self.neighbors.tolist()
        cumulative = self.cumulative.tolist()
        scaling = self.scaling.tolist()
        rows = []
        for i in range(self.n):
            start, end = ptr[i], ptr[i + 1]
            rows.append((neighbors[start:end], cumulative[start:end], scaling[start:end]))
        return rows

    @cached_property
    def higher_mass(self):
        """q_k = Σ_{j>k} p_kj for every node k (list)."""
        masses = []
        ptr = self.indptr.tolist()
        probabilities = self.probabilities.tolist()
        for k, (neighbors, _, _) in enumerate(self._rows):
            first = bisect_right(neighbors, k)
            masses.append(sum(probabilities[ptr[k] + first : ptr[k + 1]]))
        return masses

    def step(self, node, u):
        """Move from node given a uniform variate u in [0, 1).
        @return (next_node, sign) <tuple[int, float]>:
            next_node is INITIAL_HOME when the walker leaves the graph
        """
        neighbors, cumulative, scaling = self._rows[node]
        index = bisect_right(cumulative, u)
        if index == len(neighbors):
            return INITIAL_HOME, 1.0
        return neighbors[index], scaling[index]

    def step_higher(self, node, u):
        """Move from node to one of its higher-numbered neighbors, chosen with
        probability proportional to p_ij. Used for the first step of walks
        whose one-step outcomes are accounted for exactly."""
        neighbors, cumulative, scaling = self._rows[node]
        degree = len(neighbors)
        first = bisect_right(neighbors, node)
        if first == degree:
            raise ValueError(f"Node {node} has no higher-numbered neighbor")
        base = cumulative[first - 1] if first else 0.0
        target = base + u * (cumulative[-1] - base)
        index = min(bisect_right(cumulative, target, first, degree), degree - 1)
        return neighbors[index], scaling[index]


class StepSampler:
    """Deterministic uniform stream for one (master seed, stream tag, node).
    Draws are batched from a numpy Generator seeded through SeedSequence, so
    the same triple always reproduces the same walks."""

    __slots__ = ("_generator", "_buffer", "_next")

    def __init__(self, generator):
        self._generator = generator
        self._buffer = []
        self._next = 0

    @classmethod
    def for_node(cls, seed, tag, node):
        if seed < 0:
            raise ValueError(f"Seeds must be nonnegative, got {seed}")
        sequence = np.random.SeedSequence([int(seed), int(tag), int(node)])
        return cls(np.random.default_rng(sequence))

    def uniform(self):
        if self._next == len(self._buffer):
            self._buffer = self._generator.random(_UNIFORM_BATCH).tolist()
            self._next = 0
        u = self._buffer[self._next]
        self._next += 1
        return u


def sample_step(game, node, sampler):
    """Draw the next move of a walker standing at node."""
    return StepOutcome(*game.step(node, sampler.uniform()))


def build_game(A, b=None, *, scaling=False):
    """Translate A (and optionally b) into a walk game.
    @param A <SparseMatrix>:
        Square matrix with nonzero diagonal
    @param b <np.ndarray>:
        Right-hand side; sets the motel prices when given
    @param scaling <bool>:
        Allow positive off-diagonals, carried as sign factors s_ij = -1.
        Without it any positive off-diagonal is rejected.
    @return game <WalkGame>
    """
    n = A.n
    diagonal = A.diagonal()
    if scaling:
        if np.any(diagonal == 0):
            bad = int(np.flatnonzero(diagonal == 0)[0])
            raise AdmissionError(f"Zero diagonal entry in row {bad}")
    elif np.any(diagonal <= 0):
        bad = int(np.flatnonzero(diagonal <= 0)[0])
        raise AdmissionError(f"Nonpositive diagonal entry {diagonal[bad]} in row {bad}")

    rows = np.repeat(np.arange(n), np.diff(A.row_ptr))
    off = A.col_idx != rows
    if not scaling and np.any(A.values[off] > 0):
        bad = int(rows[off][np.argmax(A.values[off] > 0)])
        raise AdmissionError(
            f"Positive off-diagonal in row {bad} gives a negative transition "
            "probability; use the sign-scaling game for such matrices"
        )

    neighbors = A.col_idx[off].astype(np.int64)
    edge_rows = rows[off]
    ratios = A.values[off] / diagonal[edge_rows]
    probabilities = np.abs(ratios)
    signs = -np.sign(ratios)
    indptr = np.concatenate(([0], np.cumsum(np.bincount(edge_rows, minlength=n))))

    absolute_diagonal = np.abs(diagonal)
    off_sums = np.bincount(edge_rows, weights=np.abs(A.values[off]), minlength=n)
    home_escape = (absolute_diagonal - off_sums) / absolute_diagonal
    if np.any(home_escape < -1e-12):
        bad = int(np.argmin(home_escape))
        raise AdmissionError(
            f"Row {bad} is not diagonally dominant; its game would need "
            "scaling factors of magnitude above one"
        )
    home_escape = np.maximum(home_escape, 0.0)

    cumulative = np.empty_like(probabilities)
    for i in range(n):
        start, end = indptr[i], indptr[i + 1]
        if start == end:
            continue
        cumulative[start:end] = np.cumsum(probabilities[start:end])
        if home_escape[i] == 0.0:
            # balanced rows never leave the graph
            cumulative[end - 1] = 1.0

    game = WalkGame(
        n=n,
        indptr=indptr,
        neighbors=neighbors,
        probabilities=probabilities,
        cumulative=cumulative,
        scaling=signs,
        home_escape=home_escape,
        diagonal=diagonal,
        scaled=bool(scaling),
    )
    return game if b is None else game.with_rhs(b)
