"""Dense reference factorizations and small random test matrices."""

import numpy as np

from waldo.src.waldo.sparse_core import SparseMatrix


def dense_ldl(M):
    """Complete LDL^T of a symmetric positive definite matrix, no pivoting."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    L = np.eye(n)
    D = np.zeros(n)
    for j in range(n):
        D[j] = M[j, j] - np.sum(L[j, :j] ** 2 * D[:j])
        for i in range(j + 1, n):
            L[i, j] = (M[i, j] - np.sum(L[i, :j] * L[j, :j] * D[:j])) / D[j]
    return L, D


def dense_ldu(M):
    """Complete LDU (Doolittle, then the diagonal split off U), no pivoting."""
    U = np.array(M, dtype=np.float64)
    n = U.shape[0]
    L = np.eye(n)
    for k in range(n):
        for i in range(k + 1, n):
            L[i, k] = U[i, k] / U[k, k]
            U[i, :] -= L[i, k] * U[k, :]
    D = np.diag(U).copy()
    return L, D, U / D[:, None]


def dense_fill_pattern(M):
    """Boolean lower pattern of the complete factor by dense symbolic
    elimination of the structurally symmetrized matrix."""
    S = (np.asarray(M) != 0) | (np.asarray(M).T != 0)
    n = S.shape[0]
    S = S.copy()
    for k in range(n):
        below = [i for i in range(k + 1, n) if S[i, k]]
        for i in below:
            for j in below:
                S[i, j] = True
    return np.tril(S)


def chain_matrix(n, diagonal=2.0):
    """Tridiagonal [-1, diagonal, -1]."""
    M = diagonal * np.eye(n)
    for i in range(n - 1):
        M[i, i + 1] = M[i + 1, i] = -1.0
    return M


def random_r_matrix(n, density, rng):
    """Dense symmetric, irreducibly diagonally dominant M-matrix."""
    M = np.zeros((n, n))
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        M[a, b] = M[b, a] = -rng.uniform(0.1, 1.0)
    for i in range(n):
        for j in range(i + 1, n):
            if M[i, j] == 0 and rng.random() < density:
                M[i, j] = M[j, i] = -rng.uniform(0.1, 1.0)
    slack = np.where(rng.random(n) < 0.5, rng.uniform(0.0, 1.0, n), 0.0)
    slack[rng.integers(n)] = rng.uniform(0.5, 1.0)
    np.fill_diagonal(M, np.abs(M).sum(axis=1) + slack)
    return M


def random_dual_m_matrix(n, density, rng):
    """Dense nonsymmetric M-matrix, diagonally dominant by rows and by
    columns, with a strongly connected graph."""
    M = np.zeros((n, n))
    order = rng.permutation(n)
    for a, b in zip(order, np.roll(order, -1)):
        if a != b:
            M[a, b] = -rng.uniform(0.1, 1.0)
    for i in range(n):
        for j in range(n):
            if i != j and M[i, j] == 0 and rng.random() < density:
                M[i, j] = -rng.uniform(0.1, 1.0)
    absolute = np.abs(M)
    slack = rng.uniform(0.0, 0.5, n)
    slack[rng.integers(n)] = rng.uniform(0.5, 1.0)
    np.fill_diagonal(M, np.maximum(absolute.sum(axis=1), absolute.sum(axis=0)) + slack)
    return M


def sparse(M, symmetric=False):
    return SparseMatrix.from_dense(M, symmetry_hint=symmetric)


def relative_residual(precond, A):
    """||P A P^T - L D L^T||_F / ||A||_F in the factor's system ordering."""
    S = A.permute(precond.system_permutation).toarray()
    return np.linalg.norm(S - precond.to_dense_product()) / np.linalg.norm(A.toarray())
