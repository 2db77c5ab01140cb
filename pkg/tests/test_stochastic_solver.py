import pytest

import numpy as np

from waldo.src.waldo.conditions import StepCapExceeded
from waldo.src.waldo.general_matrices import build_scaled_game
from waldo.src.waldo.ordering import make_ordering
from waldo.src.waldo.sparse_core import SparseMatrix, gen_laplace3d
from waldo.src.waldo.stochastic_solver import (
    record_journeys,
    replay,
    solve_all,
    solve_entry,
)
from waldo.src.waldo.stopping import StoppingCriterion
from waldo.src.waldo.walk_game import build_game

from oracles import chain_matrix, sparse


def test_solve_entry_chain():
    A = chain_matrix(3)
    b = np.array([0.0, 0.0, 4.0])
    assert np.allclose(np.linalg.solve(A, b), [1.0, 2.0, 3.0])
    game = build_game(sparse(A), b)
    hits = 0
    for seed in range(100):
        estimate = solve_entry(game, 2, delta=0.1, seed=seed)
        assert estimate.walks >= 20 and estimate.half_width <= 0.1
        hits += abs(estimate.value - 3.0) <= 0.1
    assert hits >= 97


def test_solve_entry_error_shrinks_with_delta():
    game = build_game(sparse(chain_matrix(3)), np.array([0.0, 0.0, 4.0]))
    spread = {}
    for delta in (0.2, 0.02):
        values = [solve_entry(game, 2, delta=delta, seed=seed).value for seed in range(50)]
        spread[delta] = np.var(np.array(values) - 3.0)
    assert spread[0.02] < 0.1 * spread[0.2]


def test_solve_entry_is_reproducible():
    game = build_game(sparse(chain_matrix(3)), np.ones(3))
    first = solve_entry(game, 0, delta=0.2, seed=5)
    second = solve_entry(game, 0, delta=0.2, seed=5)
    assert first == second


def test_solve_entry_rejects_homes():
    game = build_game(sparse(chain_matrix(3)), np.ones(3))
    with pytest.raises(ValueError):
        solve_entry(game, 0, awards={0: 1.0})
    with pytest.raises(ValueError):
        # no motel prices without a right-hand side
        solve_entry(build_game(sparse(chain_matrix(3))), 0)


@pytest.mark.parametrize(
    "A, delta",
    [(sparse(chain_matrix(3)), 0.1), (gen_laplace3d(5, 5, 1), 0.05)],
    ids=["chain", "grid"],
)
def test_solve_all(A, delta):
    # estimates of earlier nodes feed later ones as awards, so the error
    # allowance is a few margins rather than one
    exact = np.linalg.solve(A.toarray(), np.ones(A.n))
    game = build_game(A, np.ones(A.n))
    stop = StoppingCriterion(delta=delta)
    passed = 0
    for seed in range(100):
        state = solve_all(game, make_ordering(A, "random", seed), stop, seed)
        assert state.home_set == set(range(A.n))
        assert np.all(state.walks >= stop.min_walks)
        passed += np.max(np.abs(state.values - exact)) <= 3 * stop.delta
    assert passed >= 97


def test_replay_matches_length_criterion():
    A = gen_laplace3d(4, 4, 1)
    game = build_game(A)
    ordering = make_ordering(A, "random", 2)
    stop = StoppingCriterion(delta=0.2)
    record = record_journeys(game, ordering, stop, seed=3)
    rng = np.random.default_rng(8)
    for _ in range(3):
        b = rng.uniform(-1.0, 1.0, A.n)
        replayed = replay(record, game.with_rhs(b))
        state = solve_all(game.with_rhs(b), ordering, stop, seed=3, criterion="length")
        assert np.allclose(replayed, state.values, rtol=1e-12, atol=1e-12)


def test_replay_is_linear_in_b():
    A = gen_laplace3d(3, 3, 2)
    game = build_game(A)
    record = record_journeys(game, stop=StoppingCriterion(delta=0.3), seed=1)
    rng = np.random.default_rng(9)
    b1, b2 = rng.normal(size=A.n), rng.normal(size=A.n)
    combined = replay(record, game.with_rhs(b1 + 2.0 * b2))
    parts = replay(record, game.with_rhs(b1)) + 2.0 * replay(record, game.with_rhs(b2))
    assert np.allclose(combined, parts, rtol=1e-12, atol=1e-12)


def test_nonterminating_game_hits_step_cap():
    # every row balanced: walks never leave the graph
    A = chain_matrix(3)
    A[0, 0] = A[2, 2] = 1.0
    game = build_game(sparse(A), np.ones(3))
    with pytest.raises(StepCapExceeded):
        solve_entry(game, 1, step_cap=1000)


def test_unknown_criterion():
    game = build_game(sparse(chain_matrix(3)), np.ones(3))
    with pytest.raises(ValueError):
        solve_all(game, criterion="median")


def test_scaled_game_solve():
    A = SparseMatrix.from_dense([[2.0, 1.0], [1.0, 2.0]])
    game = build_scaled_game(A, np.array([3.0, 3.0]))
    state = solve_all(game, stop=StoppingCriterion(delta=0.05), seed=4)
    assert np.allclose(state.values, [1.0, 1.0], atol=0.15)
