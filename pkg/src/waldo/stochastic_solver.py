"""Stand-alone stochastic solver for A x = b.

Each unknown x_i is the expected gain of a walk started at node i: the walker
pays the motel price of every node it stands on and collects the award of the
home where it stops (zero at the initial home). Nodes are solved one at a
time; a solved node becomes a home whose award is its estimate, so later walks
stop there.
"""

# Python standard library
from dataclasses import dataclass, field

# 3rd party imports from pypi
import numpy as np

# local imports
from .conditions import DimensionError, StepCapExceeded, err
from .sparse_core import Permutation
from .stopping import RunningStats, StoppingCriterion
from .walk_game import DEFAULT_STEP_CAP, INITIAL_HOME, STREAM_SOLVER, StepSampler


@dataclass(frozen=True)
class EntryEstimate:
    node: int
    value: float
    half_width: float
    walks: int
    std: float


@dataclass
class SolverState:
    """Result of solve_all().
    @param values <np.ndarray>:
        Estimated solution, node-indexed
    @param home_set <set>:
        Nodes that were turned into homes (all of them once solve_all returns)
    @param walks, means, variances <np.ndarray>:
        Per-node stopping statistics of the sampled quantity
    """

    values: np.ndarray
    home_set: set
    walks: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    order: Permutation


@dataclass
class FullJourneyRecord:
    """b-independent summary of the walks of a full solve.
    walks[k] is M_k; homes[k] maps end home (INITIAL_HOME included) to the
    signed number of walks that stopped there; motels[k] maps every visited
    node to its signed visit count. Signs are products of scaling factors and
    are all +1 for M-matrix games.
    """

    order: Permutation
    walks: np.ndarray
    homes: list = field(repr=False)
    motels: list = field(repr=False)

    @property
    def n(self):
        return len(self.walks)


@dataclass(frozen=True)
class _Journey:
    end: int
    sign: float
    visits: dict
    length: int


def _run_walk(game, start, homes, sampler, step_cap):
    """Walk from start until the walker reaches a node in homes or leaves the graph."""
    node = start
    sign = 1.0
    visits = {start: 1.0}
    length = 0
    step, uniform = game.step, sampler.uniform
    while True:
        nxt, s = step(node, uniform())
        length += 1
        if length > step_cap:
            raise StepCapExceeded(
                f"Walk from node {start} exceeded {step_cap} steps; "
                "the game may not terminate"
            )
        if nxt == INITIAL_HOME:
            return _Journey(INITIAL_HOME, sign, visits, length)
        sign *= s
        if nxt in homes:
            return _Journey(nxt, sign, visits, length)
        visits[nxt] = visits.get(nxt, 0.0) + sign
        node = nxt


def _gain(journey, prices, awards):
    total = 0.0
    for node, count in journey.visits.items():
        total -= count * prices[node]
    if journey.end != INITIAL_HOME:
        total += journey.sign * awards[journey.end]
    return total


def _require_prices(game):
    if game.motel_price is None:
        raise ValueError("The game has no motel prices; build it with a right-hand side")
    return game.motel_price.tolist()


def solve_entry(
    game,
    i,
    delta=0.05,
    alpha=0.99,
    min_walks=20,
    seed=0,
    awards=None,
    step_cap=DEFAULT_STEP_CAP,
):
    """Estimate x_i to within ±delta with confidence alpha.
    @param game <WalkGame>:
        Game with motel prices
    @param i <int>:
        Node to estimate
    @param awards <dict[int, float]>:
        Nodes already converted to homes and their awards
    @return estimate <EntryEstimate>
    """
    prices = _require_prices(game)
    awards = {} if awards is None else awards
    if i in awards:
        raise ValueError(f"Node {i} is already a home")
    stop = StoppingCriterion(delta, alpha, min_walks)
    sampler = StepSampler.for_node(seed, STREAM_SOLVER, i)
    stats = RunningStats()
    while not stop.satisfied(stats, relative=False):
        journey = _run_walk(game, i, awards, sampler, step_cap)
        stats.push(_gain(journey, prices, awards))
    return EntryEstimate(i, stats.mean, stop.half_width(stats), stats.count, stats.std)


def _node_journeys(game, node, homes, stop, seed, step_cap, measure=None):
    """Walk from node until stop is satisfied.
    @param measure <callable>:
        Maps a journey to the sample checked by the stopping rule (absolute
        margin); None checks walk lengths against a relative margin
    @return (journeys, stats) <tuple[list[_Journey], RunningStats]>
    """
    sampler = StepSampler.for_node(seed, STREAM_SOLVER, node)
    stats = RunningStats()
    journeys = []
    while not stop.satisfied(stats, relative=measure is None):
        journey = _run_walk(game, node, homes, sampler, step_cap)
        journeys.append(journey)
        stats.push(journey.length if measure is None else measure(journey))
    return journeys, stats


def _check_order(game, ordering):
    order = Permutation.identity(game.n) if ordering is None else ordering
    if len(order) != game.n:
        raise DimensionError(f"Ordering has length {len(order)}, game has {game.n} nodes")
    return order


def solve_all(
    game,
    ordering=None,
    stop=None,
    seed=0,
    *,
    criterion="gain",
    step_cap=DEFAULT_STEP_CAP,
    verbose=False,
):
    """Solve every node in ordering order with home creation.
    @param criterion <str>:
        'gain' stops on the spread of the gains (absolute margin delta),
        'length' on the spread of walk lengths (relative margin), which makes
        the walks independent of b and identical to record_journeys()
    @return state <SolverState>
    """
    if criterion not in ("gain", "length"):
        raise ValueError(f"Unknown stopping criterion '{criterion}'")
    prices = _require_prices(game)
    order = _check_order(game, ordering)
    stop = StoppingCriterion() if stop is None else stop

    values = np.zeros(game.n)
    walks = np.zeros(game.n, dtype=np.int64)
    means = np.zeros(game.n)
    variances = np.zeros(game.n)
    awards = {}
    for position, node in enumerate(order.inverse.tolist()):
        if criterion == "gain":
            journeys, stats = _node_journeys(
                game,
                node,
                awards,
                stop,
                seed,
                step_cap,
                measure=lambda journey: _gain(journey, prices, awards),
            )
            value = stats.mean
        else:
            journeys, stats = _node_journeys(game, node, awards, stop, seed, step_cap)
            value = sum(_gain(j, prices, awards) for j in journeys) / len(journeys)
        values[node] = value
        walks[node] = stats.count
        means[node] = stats.mean
        variances[node] = stats.variance
        awards[node] = value
        if verbose and (position + 1) % 1000 == 0:
            err(f"solved {position + 1}/{game.n} nodes")
    return SolverState(values, set(awards), walks, means, variances, order)


def record_journeys(
    game, ordering=None, stop=None, seed=0, *, step_cap=DEFAULT_STEP_CAP, verbose=False
):
    """Run the walk schedule of solve_all(criterion='length') and keep counts
    instead of gains. The record does not depend on b.
    @return record <FullJourneyRecord>
    """
    order = _check_order(game, ordering)
    stop = StoppingCriterion() if stop is None else stop

    walks = np.zeros(game.n, dtype=np.int64)
    homes = [dict() for _ in range(game.n)]
    motels = [dict() for _ in range(game.n)]
    solved = set()
    for position, node in enumerate(order.inverse.tolist()):
        journeys, _ = _node_journeys(game, node, solved, stop, seed, step_cap)
        walks[node] = len(journeys)
        ends, visited = homes[node], motels[node]
        for journey in journeys:
            ends[journey.end] = ends.get(journey.end, 0.0) + journey.sign
            for motel, count in journey.visits.items():
                visited[motel] = visited.get(motel, 0.0) + count
        solved.add(node)
        if verbose and (position + 1) % 1000 == 0:
            err(f"recorded {position + 1}/{game.n} nodes")
    return FullJourneyRecord(order, walks, homes, motels)


def replay(record, game):
    """Re-evaluate a recorded solve for the right-hand side carried by game.
    x_k = (Σ_i H_ki x_i + Σ_j J_kj b_j / A_jj) / M_k, in recording order.
    @return x <np.ndarray>
    """
    if game.n != record.n:
        raise DimensionError(f"Record covers {record.n} nodes, game has {game.n}")
    prices = _require_prices(game)
    x = np.zeros(record.n)
    solution = x.tolist()
    for node in record.order.inverse.tolist():
        total = 0.0
        for home, count in record.homes[node].items():
            if home != INITIAL_HOME:
                total += count * solution[home]
        for motel, count in record.motels[node].items():
            total -= count * prices[motel]
        solution[node] = total / record.walks[node]
    x[:] = solution
    return x
