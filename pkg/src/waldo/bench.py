"""Benchmark harness behind the sub-commands of the waldo CLI.

Every function here takes plain arguments and returns data; the argparse
front end in __main__.py turns flags into arguments and results into files,
printed summaries and exit codes.
"""

# Python standard library
from dataclasses import dataclass
from typing import Optional
import math
import os
import time

# 3rd party imports from pypi
import numpy as np
import pandas as pd

# local imports
from .baselines import ic0, ict
from .conditions import DimensionError, SizeMatchError, err
from .krylov import pcg_solve
from .ordering import make_ordering
from .precond_builder import IncompleteLdl, build_preconditioner
from .sparse_core import Permutation, gen_laplace3d, write_matrix_market, write_vector
from .stopping import StoppingCriterion
from .walk_game import DEFAULT_STEP_CAP

METHODS = ("stochastic", "ic0", "ict", "jacobi", "none")

COLUMNS = [
    "method",
    "N",
    "E",
    "C",
    "M1",
    "M1_model",
    "I",
    "M2",
    "converged",
    "final_residual",
    "wall_precond_s",
    "wall_solve_s",
    "delta",
    "drop_tol",
    "R",
]


@dataclass
class SizeMatch:
    """ICT parameters whose factor size C is within tolerance of a target."""

    drop_tol: float
    max_row_nnz: Optional[int]
    nonzeros: int
    target: int
    steps: int
    precond: IncompleteLdl

    def to_dict(self):
        return {
            "drop_tol": self.drop_tol,
            "max_row_nnz": self.max_row_nnz,
            "C": self.nonzeros,
            "target_C": self.target,
            "steps": self.steps,
        }


def cmd_gen(nx, ny, nz, output):
    """Write the nx-by-ny-by-nz grid Laplacian and an all-ones right-hand side.
    @param output <str>:
        Directory that receives A.mtx and b.mtx
    @return (matrix_path, rhs_path) <tuple[str, str]>
    """
    A = gen_laplace3d(nx, ny, nz)
    os.makedirs(output, exist_ok=True)
    matrix_path = os.path.join(output, "A.mtx")
    rhs_path = os.path.join(output, "b.mtx")
    write_matrix_market(A, matrix_path, comment=f"7-point Laplacian {nx}x{ny}x{nz}")
    write_vector(np.ones(A.n), rhs_path)
    return matrix_path, rhs_path


def resolve_ordering(A, ordering, seed):
    """Strategy name or ready-made Permutation to a Permutation."""
    if isinstance(ordering, Permutation):
        if len(ordering) != A.n:
            raise DimensionError(f"Ordering has length {len(ordering)}, matrix is {A.n}")
        return ordering
    return make_ordering(A, ordering, seed)


def build_method(
    A,
    method,
    ordering,
    seed=0,
    stop=None,
    drop_tol=1e-3,
    max_row_nnz=None,
    *,
    reuse=True,
    step_cap=DEFAULT_STEP_CAP,
    verbose=False,
):
    """Preconditioner of one method, built for the given processing order.
    @return precond <IncompleteLdl>:
        None for method 'none'
    """
    if method == "stochastic":
        return build_preconditioner(
            A,
            ordering,
            StoppingCriterion() if stop is None else stop,
            seed,
            reuse=reuse,
            step_cap=step_cap,
            verbose=verbose,
        )
    if method == "ic0":
        return ic0(A, ordering)
    if method == "ict":
        return ict(A, ordering, drop_tol, max_row_nnz)
    if method == "jacobi":
        return IncompleteLdl.diagonal_only(A, ordering)
    if method == "none":
        return None
    raise ValueError(f"Unknown method '{method}', choose from {METHODS}")


def cmd_size_match(
    A,
    target_c,
    ordering=None,
    tol_pct=10,
    max_steps=30,
    max_row_nnz=None,
    verbose=False,
):
    """Search drop_tol so that ICT's factor has C within tol_pct percent of
    target_c. Bisects log10(drop_tol) over [-8, 3] after trying the two
    limits 0 (complete factor) and inf (diagonal only).
    @return match <SizeMatch>
    """
    if target_c < A.n:
        raise ValueError(f"Target C={target_c} is below the diagonal-only size {A.n}")
    ordering = Permutation.identity(A.n) if ordering is None else ordering
    tolerance = tol_pct / 100.0

    def attempt(drop_tol, steps):
        precond = ict(A, ordering, drop_tol, max_row_nnz)
        c = precond.nonzeros
        if verbose:
            err(f"size-match step {steps}: drop_tol={drop_tol:.3e} C={c} target={target_c}")
        if abs(c - target_c) <= tolerance * target_c:
            return c, SizeMatch(drop_tol, max_row_nnz, c, int(target_c), steps, precond)
        return c, None

    steps = 0
    for limit in (0.0, math.inf):
        steps += 1
        c, match = attempt(limit, steps)
        if match is not None:
            return match
        if limit == 0.0 and c < target_c:
            raise SizeMatchError(
                f"Target C={target_c} exceeds the complete factor size {c}"
            )

    low, high = -8.0, 3.0
    while steps < max_steps:
        steps += 1
        middle = 0.5 * (low + high)
        c, match = attempt(10.0**middle, steps)
        if match is not None:
            return match
        if c > target_c:
            low = middle
        else:
            high = middle
    raise SizeMatchError(
        f"No drop_tol gave C within {tol_pct}% of {target_c} in {max_steps} steps "
        f"(last C={c})"
    )


def cmd_compare(
    A,
    b,
    methods=("ic0", "ict", "stochastic"),
    ordering="random",
    seed=0,
    stop=None,
    tol=1e-6,
    max_iter=None,
    drop_tol=None,
    max_row_nnz=None,
    *,
    size_tol_pct=10,
    size_max_steps=30,
    reuse=True,
    step_cap=DEFAULT_STEP_CAP,
    verbose=False,
):
    """Build every method's preconditioner for one shared ordering, solve with
    PCG, and tabulate cost. With 'stochastic' among the methods and no
    drop_tol, ICT is size-matched to the stochastic factor.
    @return report <pd.DataFrame>:
        One row per method, columns COLUMNS; R = M2 / M2 of the stochastic row
    """
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"Unknown method(s) {unknown}, choose from {METHODS}")
    stop = StoppingCriterion() if stop is None else stop
    ordering = resolve_ordering(A, ordering, seed)
    b = np.asarray(b, dtype=np.float64)

    # the stochastic factor is built first so ICT can be matched to it
    order = sorted(methods, key=lambda m: m != "stochastic")
    built = {}
    for method in order:
        started = time.perf_counter()
        if method == "ict" and drop_tol is None and "stochastic" in built:
            match = cmd_size_match(
                A,
                built["stochastic"][0].nonzeros,
                ordering,
                size_tol_pct,
                size_max_steps,
                max_row_nnz,
                verbose=verbose,
            )
            precond = match.precond
        else:
            precond = build_method(
                A,
                method,
                ordering,
                seed,
                stop,
                1e-3 if drop_tol is None else drop_tol,
                max_row_nnz,
                reuse=reuse,
                step_cap=step_cap,
                verbose=verbose,
            )
        built[method] = (precond, time.perf_counter() - started)

    rows = []
    for method in methods:
        precond, precond_seconds = built[method]
        if verbose:
            err(f"solving with {method}")
        _, report = pcg_solve(A, b, precond, tol=tol, max_iter=max_iter, method=method)
        row = report.to_row()
        row["wall_precond_s"] = precond_seconds
        row["wall_solve_s"] = report.wall_seconds
        row["delta"] = stop.delta if method == "stochastic" else math.nan
        row["drop_tol"] = (
            precond.metadata.get("drop_tol", math.nan) if method == "ict" else math.nan
        )
        rows.append(row)

    table = pd.DataFrame(rows)
    if "stochastic" in methods:
        reference = table.loc[table["method"] == "stochastic", "M2"].iloc[0]
        table["R"] = table["M2"] / reference if reference else math.nan
    else:
        table["R"] = math.nan
    return table[COLUMNS]


def cmd_trend(sizes, methods=("ic0", "ict", "stochastic"), **compare_kwargs):
    """Run cmd_compare() on cubic grids of the given sizes with an all-ones
    right-hand side.
    @return trend <pd.DataFrame>:
        size, N, then I_<method>, C_<method>, M2_<method> per method, and
        R1 = M2_ic0 / M2_stochastic, R2 = M2_ict / M2_stochastic when present
    """
    records = []
    for size in sizes:
        A = gen_laplace3d(size, size, size)
        table = cmd_compare(A, np.ones(A.n), methods, **compare_kwargs)
        record = {"size": int(size), "N": A.n}
        for row in table.itertuples(index=False):
            record[f"I_{row.method}"] = row.I
            record[f"C_{row.method}"] = row.C
            record[f"M2_{row.method}"] = row.M2
        if "stochastic" in methods:
            for name, baseline in (("R1", "ic0"), ("R2", "ict")):
                if baseline in methods:
                    record[name] = record[f"M2_{baseline}"] / record["M2_stochastic"]
        records.append(record)
    return pd.DataFrame(records)
