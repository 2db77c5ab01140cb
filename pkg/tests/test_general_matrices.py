import os
import pytest
import tempfile

import numpy as np

from waldo.src.waldo.conditions import AdmissionError
from waldo.src.waldo.general_matrices import (
    build_ldu,
    build_scaled_game,
    build_scaled_preconditioner,
    load_ldu,
    save_ldu,
)
from waldo.src.waldo.ordering import make_ordering
from waldo.src.waldo.precond_builder import build_preconditioner
from waldo.src.waldo.sparse_core import (
    Permutation,
    SparseMatrix,
    gen_laplace3d,
    is_pattern_subset,
    sym_factor_pattern,
)
from waldo.src.waldo.stopping import StoppingCriterion
from waldo.src.waldo.walk_game import build_game

from oracles import dense_ldu, random_dual_m_matrix, sparse


def _ldu_error(precond, M):
    """Distance of the factors from the complete LDU of the permuted matrix."""
    S = M[np.ix_(precond.system_permutation.inverse, precond.system_permutation.inverse)]
    L, D, U = dense_ldu(S)
    return (
        np.linalg.norm(precond.lower.toarray() - L)
        + np.linalg.norm(precond.upper.toarray() - U)
        + np.linalg.norm(precond.diagonal - D) / np.linalg.norm(D)
    )


def test_ldu_two_by_two():
    A = SparseMatrix.from_dense([[2.0, -1.0], [0.0, 2.0]])
    precond = build_ldu(A, Permutation.identity(2))
    assertions = [
        "np.allclose(precond.lower.toarray(), [[1.0, 0.0], [-0.5, 1.0]], atol=1e-12)",
        "np.allclose(precond.diagonal, [2.0, 2.0], atol=1e-12)",
        "np.allclose(precond.upper.toarray(), np.eye(2), atol=1e-12)",
        "np.allclose(precond.to_dense_product(), [[2.0, 0.0], [-1.0, 2.0]])",
        "precond.metadata['method'] == 'stochastic-ldu'",
    ]
    scope = {**globals(), **locals()}
    errors = [assertion for assertion in assertions if not eval(assertion, scope)]
    assert not errors, "errors occurred:\n{}".format("\n".join(errors))


def test_ldu_single_node():
    precond = build_ldu(SparseMatrix.from_dense([[5.0]]))
    assert precond.lower.toarray().tolist() == [[1.0]]
    assert precond.upper.toarray().tolist() == [[1.0]]
    assert precond.diagonal.tolist() == [5.0]


def test_ldu_of_symmetric_matrix_is_nearly_symmetric():
    A = gen_laplace3d(4, 4, 1)
    ordering = make_ordering(A, "random", 0)

    def asymmetry(delta):
        precond = build_ldu(A, ordering, StoppingCriterion(delta=delta))
        lower, upper_t = precond.lower.toarray(), precond.upper.toarray().T
        return np.linalg.norm(lower - upper_t) / np.linalg.norm(lower)

    assert asymmetry(0.05) < asymmetry(0.5)


def test_ldu_approaches_complete_factors():
    rng = np.random.default_rng(31)
    fine = 0.02 if os.environ.get("WALDO_FULL_BENCH") else 0.05
    closer = 0
    for trial in range(20):
        M = random_dual_m_matrix(int(rng.integers(3, 9)), 0.3, rng)
        A = sparse(M)
        ordering = make_ordering(A, "random", trial)
        coarse_error = _ldu_error(build_ldu(A, ordering, StoppingCriterion(delta=0.2)), M)
        fine_error = _ldu_error(build_ldu(A, ordering, StoppingCriterion(delta=fine)), M)
        closer += fine_error < coarse_error
    assert closer >= 16


def test_ldu_patterns_within_complete_factor():
    rng = np.random.default_rng(37)
    for trial in range(20):
        M = random_dual_m_matrix(int(rng.integers(2, 15)), 0.2, rng)
        A = sparse(M)
        ordering = make_ordering(A, "random", trial)
        precond = build_ldu(A, ordering, StoppingCriterion(delta=0.3), seed=trial)
        symmetrized = sparse(np.abs(M) + np.abs(M.T))
        pattern = sym_factor_pattern(symmetrized, ordering.reversed())
        assert is_pattern_subset(precond.lower, pattern)
        assert is_pattern_subset(precond.upper.transpose(), pattern)
        assert np.all(precond.diagonal > 0)


def test_ldu_admission():
    positive = np.array([[2.0, 0.5], [-0.5, 2.0]])
    # dominant by rows, column 1 is not
    row_only = np.array([[2.0, -1.5, 0.0], [-0.5, 2.0, -0.5], [0.0, -1.0, 2.0]])
    for M in (positive, row_only):
        with pytest.raises(AdmissionError):
            build_ldu(sparse(M))


def test_scaled_game_on_m_matrix_matches_plain_game():
    A = gen_laplace3d(3, 3, 2)
    plain, scaled = build_game(A), build_scaled_game(A)
    assert np.array_equal(plain.cumulative, scaled.cumulative)
    assert np.array_equal(plain.scaling, scaled.scaling)


def test_scaled_preconditioner_is_bit_identical_on_m_matrices():
    A = gen_laplace3d(4, 4, 2)
    ordering = make_ordering(A, "random", 6)
    stop = StoppingCriterion(delta=0.2)
    plain = build_preconditioner(A, ordering, stop, seed=6)
    scaled = build_scaled_preconditioner(A, ordering, stop, seed=6)
    assert plain.lower.equals(scaled.lower)
    assert np.array_equal(plain.diagonal, scaled.diagonal)
    assert scaled.metadata["method"] == "stochastic-scaled"


def test_scaled_preconditioner_two_by_two():
    A = SparseMatrix.from_dense([[2.0, 1.0], [1.0, 2.0]])
    precond = build_scaled_preconditioner(
        A, Permutation.identity(2), StoppingCriterion(delta=0.01)
    )
    # L D L^T of [[2, 1], [1, 2]] has L_10 = 0.5 and D = [2, 1.5]
    assert precond.lower.toarray()[1, 0] == 0.5
    assert precond.diagonal[0] == 2.0
    assert abs(precond.diagonal[1] - 1.5) < 0.05


def test_scaled_game_admission():
    not_dominant = SparseMatrix.from_dense([[1.0, 2.0], [2.0, 1.0]])
    zero_diagonal = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 2.0]])
    for A in (not_dominant, zero_diagonal):
        with pytest.raises(AdmissionError):
            build_scaled_game(A)
    with pytest.raises(AdmissionError):
        build_scaled_preconditioner(SparseMatrix.from_dense([[2.0, 1.0], [0.0, 2.0]]))


def test_save_and_load_ldu():
    rng = np.random.default_rng(41)
    A = sparse(random_dual_m_matrix(6, 0.3, rng))
    precond = build_ldu(A, stop=StoppingCriterion(delta=0.3), seed=1)
    with tempfile.TemporaryDirectory() as tmp_dir:
        save_ldu(precond, tmp_dir)
        assert {"L.mtx", "U.mtx", "D.mtx", "precond.json"} <= set(os.listdir(tmp_dir))
        loaded = load_ldu(tmp_dir)
    assert loaded.lower.equals(precond.lower) and loaded.upper.equals(precond.upper)
    assert np.array_equal(loaded.diagonal, precond.diagonal)
    assert loaded.ordering.equals(precond.ordering)
    assert loaded.nonzeros == precond.nonzeros
