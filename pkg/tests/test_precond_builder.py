import dataclasses
import os
import pytest
import tempfile

import numpy as np

from waldo.src.waldo.conditions import AdmissionError, BreakdownError, StepCapExceeded
from waldo.src.waldo.ordering import make_ordering
from waldo.src.waldo.precond_builder import (
    IncompleteLdl,
    PrecondJourneyRecord,
    WalkScanner,
    build_preconditioner,
    extract_reused_walks,
    finalize_row,
    load_preconditioner,
    save_preconditioner,
    simulate_rows,
)
from waldo.src.waldo.sparse_core import (
    Permutation,
    SparseMatrix,
    gen_laplace3d,
    is_pattern_subset,
    rev_matrix,
    sym_factor_pattern,
)
from waldo.src.waldo.stopping import StoppingCriterion
from waldo.src.waldo.walk_game import (
    INITIAL_HOME,
    STREAM_PRECOND,
    StepSampler,
    build_game,
)

from oracles import chain_matrix, dense_ldl, random_r_matrix, relative_residual, sparse


def test_reused_walks_long_sequence():
    record = PrecondJourneyRecord(9)
    segments = extract_reused_walks([2, 4, 6, 4, 5, 7, 6, 3, 2, 5, 8, 1], record)
    assertions = [
        "segments == [(5, 3, 4, 7), (4, 3, 1, 7), (5, 1, 9, 11), (2, 1, 0, 11)]",
        "record.walks[5] == 2 and record.walks[4] == 1 and record.walks[2] == 1",
        "record.homes[5] == {3: 1.0, 1: 1.0}",
        "record.returns[4] == 2.0",
        "record.returns[2] == 2.0",
        "record.lengths[5].count == 2 and record.lengths[5].mean == 2.5",
    ]
    scope = {**globals(), **locals()}
    errors = [assertion for assertion in assertions if not eval(assertion, scope)]
    assert not errors, "errors occurred:\n{}".format("\n".join(errors))


def test_reused_walks_short_sequence():
    # the segments starting at 5 and 4 are single steps
    assert extract_reused_walks([3, 5, 4, 1]) == [(3, 1, 0, 3)]


def test_reuse_off_credits_only_the_start():
    sequence = [2, 4, 6, 4, 5, 7, 6, 3, 2, 5, 8, 1]
    assert extract_reused_walks(sequence, reuse=False) == [(2, 1, 0, 11)]


def test_accumulate_walk_rejects_bad_walks():
    record = PrecondJourneyRecord(4)
    with pytest.raises(ValueError):
        record.accumulate_walk(2, 1, length=1)
    with pytest.raises(ValueError):
        record.accumulate_walk(2, 3)
    record.accumulate_walk(2, INITIAL_HOME, length=3)
    assert record.walks[2] == 1 and record.homes[2] == {}


def test_single_node():
    precond = build_preconditioner(SparseMatrix.from_dense([[3.0]]))
    assert precond.lower.toarray().tolist() == [[1.0]]
    assert precond.diagonal.tolist() == [3.0]


def test_rows_without_higher_neighbors_are_exact():
    rng = np.random.default_rng(21)
    stop = StoppingCriterion(delta=0.3)
    for trial in range(20):
        M = random_r_matrix(6, 0.4, rng)
        A = sparse(M)
        ordering = make_ordering(A, "random", trial)
        precond = build_preconditioner(A, ordering, stop, seed=trial)
        B = M[np.ix_(ordering.inverse, ordering.inverse)]
        L_exact, D_exact = dense_ldl(B[::-1, ::-1])
        L = precond.lower.toarray()
        n = len(M)
        exact_positions = [k for k in range(n) if not np.any(B[k, k + 1 :])]
        assert n - 1 in exact_positions
        for k in exact_positions:
            column = n - 1 - k
            assert np.allclose(L[:, column], L_exact[:, column], rtol=1e-12, atol=1e-14)
            assert np.isclose(precond.diagonal[column], D_exact[column], rtol=1e-12)


def test_two_node_diagonal_converges():
    A = sparse(chain_matrix(2))
    stop = StoppingCriterion(delta=0.01)
    precond = build_preconditioner(A, Permutation.identity(2), stop)
    # L D L^T of [[2, -1], [-1, 2]] has D = [2, 1.5]
    assert precond.diagonal[0] == 2.0
    assert abs(precond.diagonal[1] - 1.5) < 0.05
    assert precond.lower.toarray()[1, 0] == -0.5


def test_pattern_within_complete_factor():
    rng = np.random.default_rng(5)
    stop = StoppingCriterion(delta=0.3)
    for trial in range(100):
        n = int(rng.integers(2, 51))
        A = sparse(random_r_matrix(n, rng.uniform(0.0, 0.2), rng))
        ordering = make_ordering(A, "random", trial)
        precond = build_preconditioner(A, ordering, stop, seed=trial)
        pattern = sym_factor_pattern(A, ordering.reversed())
        assert is_pattern_subset(precond.lower, pattern), trial


def test_pattern_within_complete_factor_grid():
    A = gen_laplace3d(8, 8, 8)
    ordering = make_ordering(A, "random", 0)
    precond = build_preconditioner(A, ordering, StoppingCriterion(delta=0.2))
    assert is_pattern_subset(precond.lower, sym_factor_pattern(A, ordering.reversed()))
    assert np.all(precond.diagonal > 0)


def test_factorization_residual():
    A = gen_laplace3d(10, 10, 1)
    stop = StoppingCriterion(delta=0.01)
    residuals = [
        relative_residual(build_preconditioner(A, stop=stop, seed=seed), A)
        for seed in range(10)
    ]
    assert max(residuals) < 5e-3, residuals


def test_walk_reuse_does_not_degrade():
    A = gen_laplace3d(10, 10, 1)
    stop = StoppingCriterion(delta=0.1)
    seeds = range(10) if os.environ.get("WALDO_FULL_BENCH") else range(3)
    on, off, simulated_on, simulated_off = [], [], 0, 0
    for seed in seeds:
        ordering = make_ordering(A, "random", seed)
        with_reuse = build_preconditioner(A, ordering, stop, seed, reuse=True)
        without = build_preconditioner(A, ordering, stop, seed, reuse=False)
        on.append(relative_residual(with_reuse, A))
        off.append(relative_residual(without, A))
        simulated_on += with_reuse.metadata["walks_simulated"]
        simulated_off += without.metadata["walks_simulated"]
    spread = max(off) - min(off)
    assert np.mean(on) <= np.mean(off) + 2 * spread + 0.01
    assert simulated_on < simulated_off


def test_build_is_deterministic():
    A = gen_laplace3d(4, 4, 2)
    stop = StoppingCriterion(delta=0.2)
    first = build_preconditioner(A, stop=stop, seed=9)
    second = build_preconditioner(A, stop=stop, seed=9)
    other = build_preconditioner(A, stop=stop, seed=10)
    assert first.lower.equals(second.lower)
    assert np.array_equal(first.diagonal, second.diagonal)
    assert not np.array_equal(first.diagonal, other.diagonal)


def test_factor_layout_matches_walk_record():
    A = gen_laplace3d(3, 3, 3)
    ordering = make_ordering(A, "random", 1)
    stop = StoppingCriterion(delta=0.3)
    precond = build_preconditioner(A, ordering, stop, seed=4)
    B = A.permute(ordering)
    record, simulated, _ = simulate_rows(build_game(B), stop, seed=4)
    Y = record.y_matrix(B)
    assert rev_matrix(Y).transpose().equals(precond.lower)
    assert np.allclose(1.0 / record.z_diagonal(B)[::-1], precond.diagonal, rtol=1e-15)
    assert simulated == precond.metadata["walks_simulated"]


def test_y_row_sums():
    rng = np.random.default_rng(13)
    stop = StoppingCriterion(delta=0.3)
    for trial in range(10):
        M = random_r_matrix(int(rng.integers(2, 21)), 0.3, rng)
        B = sparse(M).permute(make_ordering(sparse(M), "random", trial))
        record, _, _ = simulate_rows(build_game(B), stop, seed=trial)
        sums = np.asarray(record.y_matrix(B).csr.sum(axis=1)).ravel()
        assert np.all(sums >= -1e-12) and np.all(sums <= 1.0 + 1e-12), trial


def test_audit_segments():
    A = gen_laplace3d(3, 3, 2)
    game = build_game(A.permute(make_ordering(A, "random", 0)))
    _, simulated, segments = simulate_rows(game, StoppingCriterion(delta=0.3), audit=True)
    assert segments
    spans = {}
    for walk, start, end, first, last in segments:
        assert 0 <= walk < simulated
        assert end < start and last - first >= 2
        spans.setdefault((walk, start), []).append((first, last))
    # segments credited to one node inside one simulation are disjoint
    for key, intervals in spans.items():
        intervals.sort()
        for (_, previous_last), (next_first, _) in zip(intervals, intervals[1:]):
            assert next_first >= previous_last, key


def test_finalize_row_without_walks():
    # row 0 of the chain has a higher neighbor, so it needs recorded walks
    record = PrecondJourneyRecord(2)
    with pytest.raises(BreakdownError):
        finalize_row(0, record, np.array([0, 1]), np.array([2.0, -1.0]))
    assert finalize_row(1, record, np.array([0, 1]), np.array([-1.0, 2.0])) == (
        [0],
        [-0.5],
        0.5,
    )


def test_walk_frequencies_on_chain():
    # from the middle of the 3-node chain a walk ends at node 0 with probability 1/3
    game = build_game(sparse(chain_matrix(3)))
    record = PrecondJourneyRecord(3)
    uniform = StepSampler.for_node(7, STREAM_PRECOND, 1).uniform
    trials = 10000
    for _ in range(trials):
        scanner = WalkScanner(1, record, reuse=False)
        node, sign = game.step_higher(1, uniform())
        done = scanner.advance(node, sign)
        while not done:
            node, sign = game.step(node, uniform())
            done = scanner.advance(node, sign)
    p = 1.0 / 3.0
    sigma = np.sqrt(p * (1.0 - p) / trials)
    assert record.walks == [0, trials, 0]
    assert abs(record.homes[1][0] / trials - p) < 3 * sigma
    assert record.lengths[1].count == trials


def test_y_row_sums_zero_when_walks_end_at_created_homes():
    # rows 1 and 2 are balanced: every walk from 1 ends at node 0
    M = chain_matrix(3)
    M[2, 2] = 1.0
    B = sparse(M)
    record, _, _ = simulate_rows(build_game(B), StoppingCriterion(delta=0.2), seed=3)
    assert record.homes[1] == {0: float(record.walks[1])}
    sums = np.asarray(record.y_matrix(B).csr.sum(axis=1)).ravel()
    assert sums[1] == 0.0 and sums[2] == 0.0
    assert sums[0] == 1.0


def test_scaled_walks_keep_unit_magnitude():
    M = chain_matrix(4, diagonal=2.5)
    M[0, 1] = M[1, 0] = 1.0
    game = build_game(sparse(M), scaling=True)
    stop = StoppingCriterion(delta=0.3)
    record, _, _ = simulate_rows(game, stop, seed=1, audit=True)
    assert record.check_signs
    for homes in record.homes:
        assert all(float(count).is_integer() for count in homes.values())
    damped = dataclasses.replace(game, scaling=0.5 * game.scaling)
    with pytest.raises(BreakdownError):
        simulate_rows(damped, stop, seed=1)
    strict = PrecondJourneyRecord(3, check_signs=True)
    with pytest.raises(BreakdownError):
        strict.accumulate_walk(2, 0, sign=-0.5)
    strict.accumulate_walk(2, 0, sign=-1.0)
    assert strict.homes[2] == {0: -1.0}


def test_step_cap():
    with pytest.raises(StepCapExceeded):
        build_preconditioner(sparse(chain_matrix(4)), step_cap=1)


def test_admission():
    M = chain_matrix(3)
    M[0, 2] = M[2, 0] = 0.5
    with pytest.raises(AdmissionError):
        build_preconditioner(sparse(M))


def test_diagonal_only():
    A = SparseMatrix.from_dense(np.diag([2.0, 3.0, 5.0]))
    precond = IncompleteLdl.diagonal_only(A, Permutation.from_order([1, 2, 0]))
    # system ordering is the reversed processing order: 0, 2, 1
    assert precond.diagonal.tolist() == [2.0, 5.0, 3.0]
    assert precond.nonzeros == 3 and precond.metadata["method"] == "jacobi"


def test_save_and_load():
    A = gen_laplace3d(3, 3, 2)
    precond = build_preconditioner(A, stop=StoppingCriterion(delta=0.3), seed=2)
    with tempfile.TemporaryDirectory() as tmp_dir:
        save_preconditioner(precond, tmp_dir)
        assert {"L.mtx", "D.mtx", "precond.json"} <= set(os.listdir(tmp_dir))
        loaded = load_preconditioner(tmp_dir)
    assert loaded.lower.equals(precond.lower)
    assert np.array_equal(loaded.diagonal, precond.diagonal)
    assert loaded.ordering.equals(precond.ordering)
    assert loaded.metadata["method"] == "stochastic"
    assert loaded.metadata["delta"] == 0.3
