#!/usr/bin/env python
# -*- coding: UTF-8 -*-

"""WALDO: WALk-Driven Ldl factOrizations:
Stochastic incomplete LDL^T preconditioners for sparse symmetric M-matrices
About:
    This is the main entry for the WALDO command-line tool.
USAGE:
	$ waldo <gen|precond|solve|compare|size-match|trend|debug> [OPTIONS]
Example:
    $ waldo compare --grid 20 20 20 --method ic0 ict stochastic --out table.csv
"""

# Python standard library
import json
import os
import sys
import textwrap

# 3rd party imports from pypi
import argparse
import numpy as np

# local imports
from . import bench
from .conditions import WaldoError, fatal
from .krylov import pcg_solve
from .ordering import STRATEGIES, make_ordering
from .precond_builder import load_preconditioner, save_preconditioner
from .sparse_core import gen_laplace3d, read_matrix_market, read_vector, write_vector
from .stochastic_solver import record_journeys, replay
from .stopping import StoppingCriterion
from .util import get_version, load_config, waldo_base
from .walk_game import build_game

# Tool metadata and globals
__version__ = get_version()
__home__ = os.path.dirname(os.path.abspath(__file__))
_name = os.path.basename(sys.argv[0])
_description = "stochastic incomplete factorizations for sparse linear systems"

EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3


class Colors:
    """Class encoding for ANSI escape sequences for styling terminal text.
    Any string that is formatting with these styles must be terminated with
    the escape sequence, i.e. `Colors.end`.
    """

    # Escape sequence
    end = "\33[0m"
    # Formatting options
    bold = "\33[1m"
    italic = "\33[3m"
    url = "\33[4m"
    # Text Colors
    red = "\33[31m"
    green = "\33[32m"
    yellow = "\33[33m"


def permissions(parser, filename, *args, **kwargs):
    """Checks that an input file or directory exists and that os.access() grants
    the requested mode (os.R_OK for every input WALDO reads).
    @param parser <argparse.ArgumentParser() object>:
        Argparse parser object
    @param filename <str>:
        Name of file to check
    @return filename <str>:
        If file exists and user can read from file
    """
    if not os.path.exists(filename):
        parser.error(
            "File '{}' does not exists! Failed to provide valid input.".format(filename)
        )

    if not os.access(filename, *args, **kwargs):
        parser.error(
            "File '{}' exists, but cannot read file due to permissions!".format(
                filename
            )
        )

    return filename


def rhs_option(parser, value):
    """--rhs takes a Matrix Market vector or the keyword 'ones'."""
    if value == "ones":
        return value
    return permissions(parser, value, os.R_OK)


def _settings(sub_args):
    """Defaults from config/defaults.json, a user --config file on top, and
    command-line flags on top of both.
    @return config <dict>
    """
    try:
        config = load_config(getattr(sub_args, "config", None))
    except (OSError, ValueError) as e:
        fatal("Failed to load the configuration: {}".format(e), exitcode=EXIT_INPUT)
    walks = config["walks"]
    for option in ("delta", "alpha", "min_walks"):
        value = getattr(sub_args, option, None)
        if value is not None:
            walks[option] = value
    if getattr(sub_args, "no_reuse", False):
        walks["reuse"] = False
    if getattr(sub_args, "tol", None) is not None:
        config["pcg"]["tol"] = sub_args.tol
    for option in ("drop_tol", "max_row_nnz"):
        value = getattr(sub_args, option, None)
        if value is not None:
            config["ict"][option] = value
    return config


def _stopping(walks):
    try:
        return StoppingCriterion.from_config(walks)
    except ValueError as e:
        fatal("Invalid walk parameters: {}".format(e), exitcode=EXIT_INPUT)


def _load_matrix(sub_args):
    """System matrix from --grid or --matrix."""
    try:
        if sub_args.grid:
            return gen_laplace3d(*sub_args.grid)
        return read_matrix_market(sub_args.matrix)
    except (WaldoError, OSError) as e:
        fatal("Failed to load the system matrix: {}".format(e), exitcode=EXIT_INPUT)


def _load_rhs(value, n):
    if value in (None, "ones"):
        return np.ones(n)
    try:
        return read_vector(value, n=n)
    except (WaldoError, OSError) as e:
        fatal("Failed to load the right-hand side: {}".format(e), exitcode=EXIT_INPUT)


def _solution_paths(path, count):
    """One output file per right-hand side: x.mtx, or x.0.mtx, x.1.mtx, ..."""
    if count == 1:
        return [path]
    stem, ext = os.path.splitext(path)
    return ["{}.{}{}".format(stem, k, ext) for k in range(count)]


def gen(sub_args):
    """Writes a grid Laplacian benchmark and its all-ones right-hand side.
    @param sub_args <parser.parse_args() object>:
        Parsed arguments for gen sub-command
    """
    nx, ny, nz = sub_args.grid
    print("Generating the {}x{}x{} grid Laplacian... ".format(nx, ny, nz), end="")
    try:
        matrix_path, rhs_path = bench.cmd_gen(nx, ny, nz, sub_args.output)
    except (WaldoError, OSError) as e:
        print()
        fatal("Failed to write the benchmark: {}".format(e), exitcode=EXIT_INPUT)
    print("Done!")
    print("Matrix: {}\nRight-hand side: {}".format(matrix_path, rhs_path))


def precond(sub_args):
    """Builds a preconditioner and writes L.mtx, D.mtx and precond.json.
    @param sub_args <parser.parse_args() object>:
        Parsed arguments for precond sub-command
    """
    config = _settings(sub_args)
    A = _load_matrix(sub_args)
    stop = _stopping(config["walks"])
    ordering = make_ordering(A, sub_args.ordering, sub_args.seed)
    print("Building the {} preconditioner (N={})... ".format(sub_args.method, A.n))
    try:
        factor = bench.build_method(
            A,
            sub_args.method,
            ordering,
            sub_args.seed,
            stop,
            config["ict"]["drop_tol"],
            config["ict"]["max_row_nnz"],
            reuse=config["walks"]["reuse"],
            step_cap=config["walks"]["step_cap"],
            verbose=sub_args.verbose,
        )
    except WaldoError as e:
        fatal("Failed to build the preconditioner: {}".format(e), exitcode=EXIT_INPUT)
    save_preconditioner(factor, sub_args.output)
    print("C = {} nonzeros in L".format(factor.nonzeros))
    if "walks_simulated" in factor.metadata:
        print(
            "{} walks simulated, {} recorded".format(
                factor.metadata["walks_simulated"], factor.metadata["walks_recorded"]
            )
        )
    print("Preconditioner written to '{}'".format(sub_args.output))


def _walk_solve(A, rhs, config, sub_args):
    """Records the walks of one full stochastic solve, then replays them for
    every right-hand side."""
    game = build_game(A)
    ordering = make_ordering(A, sub_args.ordering, sub_args.seed)
    record = record_journeys(
        game,
        ordering,
        _stopping(config["walks"]),
        sub_args.seed,
        step_cap=config["walks"]["step_cap"],
        verbose=sub_args.verbose,
    )
    solutions = []
    for b in rhs:
        x = replay(record, game.with_rhs(b))
        residual = np.linalg.norm(b - A.matvec(x)) / max(np.linalg.norm(b), 1e-300)
        print("walk solve: relative residual {:.3e}".format(residual))
        solutions.append(x)
    return solutions, True


def _pcg_solve(A, rhs, config, sub_args):
    if sub_args.precond:
        try:
            factor = load_preconditioner(sub_args.precond)
        except (WaldoError, OSError, ValueError) as e:
            fatal("Failed to load the preconditioner: {}".format(e), exitcode=EXIT_INPUT)
        method = factor.metadata.get("method", "ldl")
    else:
        method = sub_args.method
        ordering = make_ordering(A, sub_args.ordering, sub_args.seed)
        factor = bench.build_method(
            A,
            method,
            ordering,
            sub_args.seed,
            _stopping(config["walks"]),
            config["ict"]["drop_tol"],
            config["ict"]["max_row_nnz"],
            reuse=config["walks"]["reuse"],
            step_cap=config["walks"]["step_cap"],
            verbose=sub_args.verbose,
        )
    solutions, converged = [], True
    for b in rhs:
        x, report = pcg_solve(
            A,
            b,
            factor,
            tol=config["pcg"]["tol"],
            max_iter=sub_args.max_iter,
            true_residual_every=config["pcg"]["true_residual_every"],
            method=method,
        )
        print(json.dumps(report.to_row()))
        solutions.append(x)
        converged = converged and report.converged
    return solutions, converged


def solve(sub_args):
    """Solves A x = b for one or more right-hand sides.
    @param sub_args <parser.parse_args() object>:
        Parsed arguments for solve sub-command
    """
    config = _settings(sub_args)
    A = _load_matrix(sub_args)
    rhs = [_load_rhs(value, A.n) for value in (sub_args.rhs or ["ones"])]
    try:
        if sub_args.method == "walk":
            solutions, converged = _walk_solve(A, rhs, config, sub_args)
        else:
            solutions, converged = _pcg_solve(A, rhs, config, sub_args)
    except WaldoError as e:
        fatal("Solve failed: {}".format(e), exitcode=EXIT_INPUT)
    if sub_args.solution:
        for x, path in zip(solutions, _solution_paths(sub_args.solution, len(rhs))):
            write_vector(x, path)
            print("Solution written to '{}'".format(path))
    if not converged:
        fatal("PCG did not converge for every right-hand side", exitcode=EXIT_NOT_CONVERGED)


def compare(sub_args):
    """Runs PCG with every requested preconditioner and tabulates cost.
    @param sub_args <parser.parse_args() object>:
        Parsed arguments for compare sub-command
    """
    config = _settings(sub_args)
    if sub_args.delta is None:
        config["walks"]["delta"] = config["bench"]["delta"]
    A = _load_matrix(sub_args)
    b = _load_rhs(sub_args.rhs, A.n)
    methods = sub_args.method or config["bench"]["methods"]
    try:
        table = bench.cmd_compare(
            A,
            b,
            methods,
            sub_args.ordering or config["bench"]["ordering"],
            config["bench"]["seed"] if sub_args.seed is None else sub_args.seed,
            _stopping(config["walks"]),
            config["pcg"]["tol"],
            sub_args.max_iter,
            sub_args.drop_tol,
            config["ict"]["max_row_nnz"],
            size_tol_pct=config["size_match"]["tol_pct"],
            size_max_steps=config["size_match"]["max_steps"],
            reuse=config["walks"]["reuse"],
            step_cap=config["walks"]["step_cap"],
            verbose=sub_args.verbose,
        )
    except WaldoError as e:
        fatal("Comparison failed: {}".format(e), exitcode=EXIT_INPUT)
    print(table.to_string(index=False))
    if sub_args.out:
        table.to_csv(sub_args.out, index=False)
        print("Report written to '{}'".format(sub_args.out))
    if not table["converged"].all():
        failed = ", ".join(table.loc[~table["converged"], "method"])
        fatal("Not converged: {}".format(failed), exitcode=EXIT_NOT_CONVERGED)


def size_match(sub_args):
    """Searches ICT parameters whose factor size matches a target.
    @param sub_args <parser.parse_args() object>:
        Parsed arguments for size-match sub-command
    """
    config = _settings(sub_args)
    A = _load_matrix(sub_args)
    ordering = make_ordering(A, sub_args.ordering, sub_args.seed)
    target = sub_args.target_c
    tol_pct = sub_args.tol_pct
    if tol_pct is None:
        tol_pct = config["size_match"]["tol_pct"]
    max_steps = sub_args.max_steps
    if max_steps is None:
        max_steps = config["size_match"]["max_steps"]
    try:
        if target is None:
            stochastic = bench.build_method(
                A,
                "stochastic",
                ordering,
                sub_args.seed,
                _stopping(config["walks"]),
                reuse=config["walks"]["reuse"],
                step_cap=config["walks"]["step_cap"],
                verbose=sub_args.verbose,
            )
            target = stochastic.nonzeros
            print("Target C = {} (stochastic preconditioner)".format(target))
        match = bench.cmd_size_match(
            A,
            target,
            ordering,
            tol_pct,
            max_steps,
            config["ict"]["max_row_nnz"],
            verbose=sub_args.verbose,
        )
    except (WaldoError, ValueError) as e:
        fatal("Size matching failed: {}".format(e), exitcode=EXIT_INPUT)
    print(json.dumps(match.to_dict(), indent=4))


def trend(sub_args):
    """Runs compare on a series of cubic grids and reports R1 and R2.
    @param sub_args <parser.parse_args() object>:
        Parsed arguments for trend sub-command
    """
    config = _settings(sub_args)
    if sub_args.delta is None:
        config["walks"]["delta"] = config["bench"]["delta"]
    try:
        table = bench.cmd_trend(
            sub_args.sizes,
            sub_args.method or config["bench"]["methods"],
            ordering=sub_args.ordering or config["bench"]["ordering"],
            seed=config["bench"]["seed"] if sub_args.seed is None else sub_args.seed,
            stop=_stopping(config["walks"]),
            tol=config["pcg"]["tol"],
            size_tol_pct=config["size_match"]["tol_pct"],
            size_max_steps=config["size_match"]["max_steps"],
            reuse=config["walks"]["reuse"],
            verbose=sub_args.verbose,
        )
    except WaldoError as e:
        fatal("Trend sweep failed: {}".format(e), exitcode=EXIT_INPUT)
    print(table.to_string(index=False))
    if sub_args.out:
        table.to_csv(sub_args.out, index=False)
        print("Report written to '{}'".format(sub_args.out))


def _matrix_options(parser, subparser, required=True):
    """--matrix PATH | --grid NX NY NZ, shared by every sub-command that reads A."""
    source = subparser.add_mutually_exclusive_group(required=required)
    source.add_argument(
        "--matrix",
        type=lambda file: permissions(parser, file, os.R_OK),
        help=argparse.SUPPRESS,
    )
    source.add_argument(
        "--grid",
        type=int,
        nargs=3,
        metavar=("NX", "NY", "NZ"),
        help=argparse.SUPPRESS,
    )


def _walk_options(subparser, ordering_default="random"):
    subparser.add_argument("--delta", type=float, default=None, help=argparse.SUPPRESS)
    subparser.add_argument("--alpha", type=float, default=None, help=argparse.SUPPRESS)
    subparser.add_argument(
        "--min-walks", dest="min_walks", type=int, default=None, help=argparse.SUPPRESS
    )
    subparser.add_argument(
        "--ordering",
        choices=STRATEGIES,
        default=ordering_default,
        help=argparse.SUPPRESS,
    )
    subparser.add_argument("--no-reuse", action="store_true", help=argparse.SUPPRESS)


def _misc_options(parser, subparser, seed_default=0):
    subparser.add_argument("--seed", type=int, default=seed_default, help=argparse.SUPPRESS)
    subparser.add_argument(
        "--config",
        type=lambda file: permissions(parser, file, os.R_OK),
        default=None,
        help=argparse.SUPPRESS,
    )
    subparser.add_argument("--verbose", action="store_true", help=argparse.SUPPRESS)
    subparser.add_argument("-h", "--help", action="help", help=argparse.SUPPRESS)


def parsed_arguments(name, description):
    """Parses user-provided command-line arguments. To create custom help
    formatting for subparsers a docstring is used create the help message for
    required options; argparse does not support named subparser groups. If a
    new option is added to a subparser, it must be added to the docstring too.
    @param name <str>:
        Name of the command-line tool
    @param description <str>:
        Short description of the command-line tool
    """
    c = Colors
    description = "{0}{1}{2}".format(c.bold, description, c.end)

    parser = argparse.ArgumentParser(prog="waldo", description=description)
    parser.add_argument(
        "--version", action="version", version="waldo {}".format(__version__)
    )
    subparsers = parser.add_subparsers(help="List of available sub-commands")

    matrix_help = textwrap.dedent(
        """\
          --matrix MATRIX       System matrix in Matrix Market coordinate
                                format (general or symmetric).
                                  Example: --matrix A.mtx
          --grid NX NY NZ       Use the 7-point grid Laplacian of this size
                                instead of reading a matrix.
                                  Example: --grid 20 20 20"""
    )
    walk_help = textwrap.dedent(
        """\
          --delta DELTA         Relative error margin of the per-node walk
                                stopping rule.
                                  Example: --delta 0.05
          --alpha ALPHA         Confidence level of the stopping rule.
                                  Example: --alpha 0.99
          --min-walks N         Walks launched from a node before the rule
                                is first checked.
                                  Example: --min-walks 20
          --ordering {random,md,cm,natural}
                                Processing order of the nodes.
                                  Example: --ordering md
          --no-reuse            Do not credit the walks found inside each
                                simulated walk to their start nodes.
                                  Example: --no-reuse"""
    )
    misc_help = textwrap.dedent(
        """\
          --seed SEED           Master seed of every random stream.
                                  Example: --seed 0
          --config CONFIG       JSON file overriding config/defaults.json.
                                  Example: --config my.json
          --verbose             Report progress on standard error.
          -h, --help            Show usage information and exit."""
    )

    def options_block(text):
        return textwrap.indent(text, "  ").strip("\n")

    # Options for the "gen" sub-command
    required_gen_options = textwrap.dedent(
        """\
        {1}{0} {3}gen{4}: {1}Generate a grid Laplacian benchmark.{4}

        {1}{2}Synopsis:{4}
          $ {0} gen [--help] --grid NX NY NZ --output OUTPUT

        {1}{2}Description:{4}
        Writes the 7-point finite-difference Laplacian of an NX-by-NY-by-NZ
        grid to OUTPUT/A.mtx and an all-ones right-hand side to OUTPUT/b.mtx.

        {1}{2}Required arguments:{4}
          --grid NX NY NZ       Grid extents.
                                  Example: --grid 50 50 50
          --output OUTPUT       Output directory.
                                  Example: --output bench/m1
        """.format(
            "waldo", c.bold, c.url, c.italic, c.end
        )
    )
    subparser_gen = subparsers.add_parser(
        "gen",
        help="Generate a grid Laplacian benchmark.",
        usage=argparse.SUPPRESS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=required_gen_options,
        add_help=False,
    )
    subparser_gen.add_argument(
        "--grid",
        type=int,
        nargs=3,
        metavar=("NX", "NY", "NZ"),
        required=True,
        help=argparse.SUPPRESS,
    )
    subparser_gen.add_argument(
        "--output",
        type=lambda option: os.path.abspath(os.path.expanduser(option)),
        required=True,
        help=argparse.SUPPRESS,
    )
    subparser_gen.add_argument("-h", "--help", action="help", help=argparse.SUPPRESS)

    # Options for the "precond" sub-command
    required_precond_options = (
        textwrap.dedent(
            """\
        {1}{0} {3}precond{4}: {1}Build and save a preconditioner.{4}

        {1}{2}Synopsis:{4}
          $ {0} precond [--help] (--matrix MATRIX | --grid NX NY NZ) \\
                  --output OUTPUT [--method {{stochastic,ic0,ict,jacobi}}] \\
                  [--drop-tol DROP_TOL] [--max-row-nnz N] [walk options]

        {1}{2}Description:{4}
        Builds an incomplete LDL^T factor of the matrix permuted by the
        reverse of the processing order and writes L.mtx, D.mtx and
        precond.json (method, parameters, ordering) to OUTPUT.

        {1}{2}Required arguments:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(matrix_help)
        + textwrap.dedent(
            """
          --output OUTPUT       Directory receiving the factor files.
                                  Example: --output precond/

        {1}{2}Method options:{4}
          --method METHOD       One of stochastic, ic0, ict, jacobi.
                                  Example: --method stochastic
          --drop-tol DROP_TOL   ICT drop tolerance, relative to row norms.
                                  Example: --drop-tol 1e-3
          --max-row-nnz N       ICT cap on kept entries per row.
                                  Example: --max-row-nnz 10

        {1}{2}Walk options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(walk_help)
        + textwrap.dedent(
            """

        {1}{2}Misc Options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(misc_help)
    )
    subparser_precond = subparsers.add_parser(
        "precond",
        help="Build and save a preconditioner.",
        usage=argparse.SUPPRESS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=required_precond_options,
        add_help=False,
    )
    _matrix_options(parser, subparser_precond)
    subparser_precond.add_argument(
        "--output",
        type=lambda option: os.path.abspath(os.path.expanduser(option)),
        required=True,
        help=argparse.SUPPRESS,
    )
    subparser_precond.add_argument(
        "--method",
        choices=("stochastic", "ic0", "ict", "jacobi"),
        default="stochastic",
        help=argparse.SUPPRESS,
    )
    subparser_precond.add_argument(
        "--drop-tol", dest="drop_tol", type=float, default=None, help=argparse.SUPPRESS
    )
    subparser_precond.add_argument(
        "--max-row-nnz", dest="max_row_nnz", type=int, default=None, help=argparse.SUPPRESS
    )
    _walk_options(subparser_precond)
    _misc_options(parser, subparser_precond)

    # Options for the "solve" sub-command
    required_solve_options = (
        textwrap.dedent(
            """\
        {1}{0} {3}solve{4}: {1}Solve A x = b.{4}

        {1}{2}Synopsis:{4}
          $ {0} solve [--help] (--matrix MATRIX | --grid NX NY NZ) \\
                  [--rhs RHS ...] [--precond DIR] [--method METHOD] \\
                  [--tol TOL] [--max-iter N] [--solution SOLUTION]

        {1}{2}Description:{4}
        Runs preconditioned conjugate gradients with a saved or freshly
        built preconditioner, or the stand-alone walk solver (--method walk),
        which records its walks once and replays them for every --rhs.

        {1}{2}Required arguments:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(matrix_help)
        + textwrap.dedent(
            """

        {1}{2}Solver options:{4}
          --rhs RHS             Right-hand side vector file, or 'ones'.
                                May be repeated.
                                  Example: --rhs b.mtx
          --precond DIR         Preconditioner written by precond.
                                  Example: --precond precond/
          --method METHOD       One of stochastic, ic0, ict, jacobi, none,
                                walk. Ignored with --precond.
                                  Example: --method ic0
          --tol TOL             Relative residual tolerance.
                                  Example: --tol 1e-6
          --max-iter N          Iteration cap (default 10*sqrt(N)).
                                  Example: --max-iter 500
          --solution SOLUTION   Write x here (x.0.mtx, x.1.mtx, ... for
                                several right-hand sides).
                                  Example: --solution x.mtx

        {1}{2}Walk options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(walk_help)
        + textwrap.dedent(
            """

        {1}{2}Misc Options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(misc_help)
    )
    subparser_solve = subparsers.add_parser(
        "solve",
        help="Solve A x = b.",
        usage=argparse.SUPPRESS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=required_solve_options,
        add_help=False,
    )
    _matrix_options(parser, subparser_solve)
    subparser_solve.add_argument(
        "--rhs",
        type=lambda value: rhs_option(parser, value),
        action="append",
        default=None,
        help=argparse.SUPPRESS,
    )
    subparser_solve.add_argument(
        "--precond",
        type=lambda directory: permissions(parser, directory, os.R_OK),
        default=None,
        help=argparse.SUPPRESS,
    )
    subparser_solve.add_argument(
        "--method",
        choices=bench.METHODS + ("walk",),
        default="stochastic",
        help=argparse.SUPPRESS,
    )
    subparser_solve.add_argument("--tol", type=float, default=None, help=argparse.SUPPRESS)
    subparser_solve.add_argument(
        "--max-iter", dest="max_iter", type=int, default=None, help=argparse.SUPPRESS
    )
    subparser_solve.add_argument("--solution", default=None, help=argparse.SUPPRESS)
    _walk_options(subparser_solve)
    _misc_options(parser, subparser_solve)

    # Options for the "compare" sub-command
    required_compare_options = (
        textwrap.dedent(
            """\
        {1}{0} {3}compare{4}: {1}Compare preconditioners on one system.{4}

        {1}{2}Synopsis:{4}
          $ {0} compare [--help] (--matrix MATRIX | --grid NX NY NZ) \\
                  [--rhs RHS] [--method METHOD ...] [--tol TOL] \\
                  [--drop-tol DROP_TOL] [--out OUT]

        {1}{2}Description:{4}
        Builds every requested preconditioner for one shared processing
        order, solves with PCG and reports N, E, C, M1 = 2C + E + 4N (model
        and counted), iterations I, M2 = M1 * I, wall times and the ratio
        R of each method's M2 to the stochastic one. Without --drop-tol, ICT
        is size-matched to the stochastic factor.

        {1}{2}Required arguments:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(matrix_help)
        + textwrap.dedent(
            """

        {1}{2}Comparison options:{4}
          --rhs RHS             Right-hand side vector file, or 'ones'.
                                  Example: --rhs ones
          --method METHOD ...   Methods to compare.
                                  Example: --method ic0 ict stochastic
          --tol TOL             Relative residual tolerance.
                                  Example: --tol 1e-6
          --max-iter N          Iteration cap (default 10*sqrt(N)).
          --drop-tol DROP_TOL   Fixed ICT drop tolerance.
                                  Example: --drop-tol 1e-2
          --out OUT             CSV report.
                                  Example: --out table.csv

        {1}{2}Walk options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(walk_help)
        + textwrap.dedent(
            """

        {1}{2}Misc Options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(misc_help)
    )
    compare_epilog = textwrap.dedent(
        """\
        {2}{3}Example:{4}
          # Step 1.) Generate the benchmark
          {0} gen --grid 20 20 20 --output bench/

          # Step 2.) Compare the preconditioners
          {0} compare --matrix bench/A.mtx --rhs bench/b.mtx \\
                      --method ic0 ict stochastic --out bench/table.csv

        {2}{3}Version:{4}
          {1}
        """.format(
            "waldo", __version__, c.bold, c.url, c.end
        )
    )
    subparser_compare = subparsers.add_parser(
        "compare",
        help="Compare preconditioners on one system.",
        usage=argparse.SUPPRESS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=required_compare_options,
        epilog=compare_epilog,
        add_help=False,
    )
    _matrix_options(parser, subparser_compare)
    subparser_compare.add_argument(
        "--rhs",
        type=lambda value: rhs_option(parser, value),
        default="ones",
        help=argparse.SUPPRESS,
    )
    subparser_compare.add_argument(
        "--method", nargs="+", choices=bench.METHODS, default=None, help=argparse.SUPPRESS
    )
    subparser_compare.add_argument(
        "--tol", type=float, default=None, help=argparse.SUPPRESS
    )
    subparser_compare.add_argument(
        "--max-iter", dest="max_iter", type=int, default=None, help=argparse.SUPPRESS
    )
    subparser_compare.add_argument(
        "--drop-tol", dest="drop_tol", type=float, default=None, help=argparse.SUPPRESS
    )
    subparser_compare.add_argument("--out", default=None, help=argparse.SUPPRESS)
    _walk_options(subparser_compare, ordering_default=None)
    _misc_options(parser, subparser_compare, seed_default=None)

    # Options for the "size-match" sub-command
    required_size_match_options = (
        textwrap.dedent(
            """\
        {1}{0} {3}size-match{4}: {1}Find ICT parameters for a target factor size.{4}

        {1}{2}Synopsis:{4}
          $ {0} size-match [--help] (--matrix MATRIX | --grid NX NY NZ) \\
                  [--target-c C] [--tol-pct PCT] [--max-steps N]

        {1}{2}Description:{4}
        Bisects the ICT drop tolerance until the factor has C within PCT
        percent of the target. Without --target-c the target is the C of
        the stochastic preconditioner built with the walk options.

        {1}{2}Required arguments:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(matrix_help)
        + textwrap.dedent(
            """

        {1}{2}Search options:{4}
          --target-c C          Target number of nonzeros in L.
                                  Example: --target-c 500000
          --tol-pct PCT         Accepted deviation in percent.
                                  Example: --tol-pct 10
          --max-steps N         Budget of ICT factorizations.
                                  Example: --max-steps 30

        {1}{2}Walk options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(walk_help)
        + textwrap.dedent(
            """

        {1}{2}Misc Options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(misc_help)
    )
    subparser_size_match = subparsers.add_parser(
        "size-match",
        help="Find ICT parameters for a target factor size.",
        usage=argparse.SUPPRESS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=required_size_match_options,
        add_help=False,
    )
    _matrix_options(parser, subparser_size_match)
    subparser_size_match.add_argument(
        "--target-c", dest="target_c", type=int, default=None, help=argparse.SUPPRESS
    )
    subparser_size_match.add_argument(
        "--tol-pct", dest="tol_pct", type=float, default=None, help=argparse.SUPPRESS
    )
    subparser_size_match.add_argument(
        "--max-steps", dest="max_steps", type=int, default=None, help=argparse.SUPPRESS
    )
    _walk_options(subparser_size_match)
    _misc_options(parser, subparser_size_match)

    # Options for the "trend" sub-command
    required_trend_options = (
        textwrap.dedent(
            """\
        {1}{0} {3}trend{4}: {1}Compare preconditioners on growing grids.{4}

        {1}{2}Synopsis:{4}
          $ {0} trend [--help] --sizes S [S ...] [--method METHOD ...] \\
                  [--tol TOL] [--out OUT]

        {1}{2}Description:{4}
        Runs compare on S-by-S-by-S grid Laplacians with an all-ones
        right-hand side and reports R1 = M2(ic0) / M2(stochastic) and
        R2 = M2(ict) / M2(stochastic) per size.

        {1}{2}Required arguments:{4}
          --sizes S [S ...]     Grid sizes.
                                  Example: --sizes 20 30 40

        {1}{2}Trend options:{4}
          --method METHOD ...   Methods to compare.
                                  Example: --method ic0 ict stochastic
          --tol TOL             Relative residual tolerance.
                                  Example: --tol 1e-6
          --out OUT             CSV report.
                                  Example: --out trend.csv

        {1}{2}Walk options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(walk_help)
        + textwrap.dedent(
            """

        {1}{2}Misc Options:{4}
        """
        ).format("waldo", c.bold, c.url, c.italic, c.end)
        + options_block(misc_help)
    )
    subparser_trend = subparsers.add_parser(
        "trend",
        help="Compare preconditioners on growing grids.",
        usage=argparse.SUPPRESS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=required_trend_options,
        add_help=False,
    )
    subparser_trend.add_argument(
        "--sizes", type=int, nargs="+", required=True, help=argparse.SUPPRESS
    )
    subparser_trend.add_argument(
        "--method", nargs="+", choices=bench.METHODS, default=None, help=argparse.SUPPRESS
    )
    subparser_trend.add_argument("--tol", type=float, default=None, help=argparse.SUPPRESS)
    subparser_trend.add_argument("--out", default=None, help=argparse.SUPPRESS)
    _walk_options(subparser_trend, ordering_default=None)
    _misc_options(parser, subparser_trend, seed_default=None)

    subparser_debug = subparsers.add_parser(
        "debug",
        help="Debug the WALDO base directory.",
        usage=argparse.SUPPRESS,
    )

    # Define handlers for each sub-parser
    subparser_gen.set_defaults(func=gen)
    subparser_precond.set_defaults(func=precond)
    subparser_solve.set_defaults(func=solve)
    subparser_compare.set_defaults(func=compare)
    subparser_size_match.set_defaults(func=size_match)
    subparser_trend.set_defaults(func=trend)
    subparser_debug.set_defaults(func=debug)

    # Parse command-line args
    args = parser.parse_args()
    return args


def debug(args):
    print("WALDO BASE:", waldo_base(debug=True))
    print(get_version(debug=True))


def main():
    # Sanity check for usage
    if len(sys.argv) == 1:
        # Nothing was provided
        fatal("Invalid usage: {} [-h] [--version] ...".format("waldo"))

    # Collect args for sub-command
    args = parsed_arguments(name=_name, description=_description)

    # Display version information
    print("WALDO ({})".format(__version__))

    # Mediator method to call sub-command's set handler function
    args.func(args)


if __name__ == "__main__":
    main()
