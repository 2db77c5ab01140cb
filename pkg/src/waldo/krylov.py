"""Preconditioned conjugate gradient with multiplication accounting.

Every vector kernel of the solver goes through a MultiplyCounter. A full
iteration performs one product with A (E multiplications), one preconditioner
application (two unit triangular solves and a diagonal scaling: 2C - N), two
inner products, three vector updates and one residual norm (6N): 2C + E + 5N
against the 2C + E + 4N cost model. The last iteration skips the next search
direction, so the counted average per iteration stays within N of the model.
Without a preconditioner r^T z is the residual norm already taken, giving
E + 5N. True-residual recomputations are counted apart.
"""

# Python standard library
from dataclasses import asdict, dataclass, field
import math
import time
import warnings

# 3rd party imports from pypi
import numpy as np
from scipy.sparse.linalg import spsolve_triangular

# local imports
from .conditions import BreakdownError, DimensionError
from .precond_builder import build_preconditioner
from .stopping import StoppingCriterion


@dataclass
class SolveReport:
    """Outcome and cost of one pcg_solve() call.
    @param iterations <int>:
        I
    @param mults_per_iter <int>:
        Counted multiplications per iteration, averaged over the solve (M1)
    @param total_mults <int>:
        M2 = M1 * I
    @param residual_history <list[float]>:
        ||r|| / ||b|| before the first iteration and after each one
    @param counted_mults <int>:
        Every multiplication of the iterations, refreshes excluded
    """

    method: str
    n: int
    matrix_nonzeros: int
    precond_nonzeros: int
    iterations: int
    mults_per_iter: int
    total_mults: int
    converged: bool
    residual_history: list = field(default_factory=list)
    counted_mults: int = 0
    true_residual_mults: int = 0
    wall_seconds: float = 0.0

    @property
    def model_mults_per_iter(self):
        return count_m1(self.precond_nonzeros, self.matrix_nonzeros, self.n)

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else math.nan

    def to_dict(self):
        report = asdict(self)
        report["model_mults_per_iter"] = self.model_mults_per_iter
        return report

    def to_row(self):
        """Flat record for tabular reports (residual history left out)."""
        return {
            "method": self.method,
            "N": self.n,
            "E": self.matrix_nonzeros,
            "C": self.precond_nonzeros,
            "M1": self.mults_per_iter,
            "M1_model": self.model_mults_per_iter,
            "I": self.iterations,
            "M2": self.total_mults,
            "converged": self.converged,
            "final_residual": self.final_residual,
        }


def count_m1(C, E, N):
    """Multiplications per PCG iteration: 2C + E + 4N.
    @param C <int>:
        Nonzeros of the preconditioner factor L, unit diagonal included
    @param E <int>:
        Nonzeros of A
    @param N <int>:
        Dimension
    """
    if min(C, E, N) < 0:
        raise ValueError(f"Counts must be nonnegative, got C={C}, E={E}, N={N}")
    return 2 * C + E + 4 * N


@dataclass
class MultiplyCounter:
    """Tally of the multiplications performed by the vector kernels below.
    Products with a stored matrix count one per stored entry the kernel uses.
    """

    count: int = 0

    def matvec(self, A, v):
        self.count += A.nnz
        return A.matvec(v)

    def dot(self, u, v):
        self.count += len(u)
        return float(u @ v)

    def axpy(self, alpha, x, y):
        """y + alpha * x"""
        self.count += len(x)
        return y + alpha * x

    def triangular_solve(self, T, v, lower):
        # unit diagonal: only the off-diagonal entries multiply
        self.count += T.nnz - T.shape[0]
        return spsolve_triangular(T, v, lower=lower, unit_diagonal=True)

    def scale(self, v, d):
        self.count += len(v)
        return v / d


def apply_ldl_inverse(precond, r, counter=None):
    """z = (L D L^T)^{-1} r, with r and z in the node ordering of A.
    @param precond <IncompleteLdl>
    @param r <np.ndarray>
    @param counter <MultiplyCounter>:
        Receives the multiplications of the two solves and the scaling
    @return z <np.ndarray>
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (precond.n,):
        raise DimensionError(
            f"Vector has shape {r.shape}, preconditioner is {precond.n}x{precond.n}"
        )
    if np.any(precond.diagonal == 0):
        raise BreakdownError("Preconditioner has a zero entry in D")
    counter = MultiplyCounter() if counter is None else counter
    perm = precond.system_permutation
    y = counter.triangular_solve(precond.lower.csr, perm.apply(r), lower=True)
    y = counter.scale(y, precond.diagonal)
    z = counter.triangular_solve(precond.upper_csr, y, lower=False)
    return perm.undo(z)


def pcg_solve(
    A,
    b,
    precond=None,
    tol=1e-6,
    max_iter=None,
    true_residual_every=10,
    callback=None,
    method=None,
):
    """Solve A x = b by preconditioned conjugate gradients.
    Stops once ||b - A x|| < tol * ||b||; the recursive residual is replaced by
    the true one every true_residual_every iterations and is always confirmed
    against it before declaring convergence.
    @param A <SparseMatrix>:
        Symmetric positive definite
    @param precond <IncompleteLdl>:
        None runs plain CG
    @param max_iter <int>:
        Default ceil(10 * sqrt(N))
    @param callback <callable>:
        Called as callback(iteration, x) after every iteration
    @return (x, report) <tuple[np.ndarray, SolveReport]>
    """
    n = A.n
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise DimensionError(f"Right-hand side has shape {b.shape}, matrix is {n}x{n}")
    if precond is not None and precond.n != n:
        raise DimensionError(
            f"Preconditioner is {precond.n}x{precond.n}, matrix is {n}x{n}"
        )
    if max_iter is None:
        max_iter = max(1, math.ceil(10 * math.sqrt(n)))
    if method is None:
        method = "none" if precond is None else precond.metadata.get("method", "ldl")

    loop = MultiplyCounter()
    refresh = MultiplyCounter()

    def apply(r):
        if precond is None:
            return r
        return apply_ldl_inverse(precond, r, loop)

    started = time.perf_counter()
    E = A.nnz
    C = 0 if precond is None else precond.nonzeros

    x = np.zeros(n)
    b_norm = float(np.linalg.norm(b))
    history = [1.0 if b_norm > 0 else 0.0]
    iterations = 0
    converged = b_norm == 0.0
    if not converged:
        r = b.copy()
        z = apply(r)
        p = z.copy()
        rho = loop.dot(r, z)
        while True:
            q = loop.matvec(A, p)
            curvature = loop.dot(p, q)
            if curvature <= 0:
                raise BreakdownError(
                    "Nonpositive curvature p^T A p; "
                    "matrix or preconditioner is not positive definite"
                )
            step = rho / curvature
            x = loop.axpy(step, p, x)
            r = loop.axpy(-step, q, r)
            iterations += 1
            if iterations % true_residual_every == 0:
                r = b - refresh.matvec(A, x)
            r_squared = loop.dot(r, r)
            relative = math.sqrt(r_squared) / b_norm
            history.append(relative)
            if callback is not None:
                callback(iterations, x)
            if relative < tol:
                true_r = b - refresh.matvec(A, x)
                if math.sqrt(refresh.dot(true_r, true_r)) / b_norm < tol:
                    converged = True
                    break
                r = true_r
                r_squared = refresh.dot(r, r)
            if iterations >= max_iter:
                break
            z = apply(r)
            # without a preconditioner z is r and r^T z is already known
            rho_next = r_squared if precond is None else loop.dot(r, z)
            p = loop.axpy(rho_next / rho, p, z)
            rho = rho_next

    mults_per_iter = round(loop.count / iterations) if iterations else 0

    if not converged:
        warnings.warn(
            f"PCG ({method}) did not reach tol={tol} within {max_iter} iterations; "
            f"relative residual {history[-1]:.3e}",
            UserWarning,
        )
    report = SolveReport(
        method=method,
        n=n,
        matrix_nonzeros=E,
        precond_nonzeros=C,
        iterations=iterations,
        mults_per_iter=mults_per_iter,
        total_mults=mults_per_iter * iterations,
        converged=converged,
        residual_history=history,
        counted_mults=loop.count,
        true_residual_mults=refresh.count,
        wall_seconds=time.perf_counter() - started,
    )
    return x, report


def hybrid_solve(
    A,
    b,
    stop=None,
    ordering=None,
    seed=0,
    tol=1e-6,
    max_iter=None,
    *,
    reuse=True,
    verbose=False,
):
    """Build the stochastic preconditioner of A, then run PCG on A x = b.
    @return (x, report, precond) <tuple>
    """
    precond = build_preconditioner(
        A,
        ordering=ordering,
        stop=StoppingCriterion() if stop is None else stop,
        seed=seed,
        reuse=reuse,
        verbose=verbose,
    )
    x, report = pcg_solve(A, b, precond, tol=tol, max_iter=max_iter)
    return x, report, precond
