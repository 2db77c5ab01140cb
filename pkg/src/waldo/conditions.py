import sys


class WaldoError(Exception):
    """Base class for every error raised by WALDO."""


class MatrixMarketError(WaldoError, ValueError):
    """Malformed Matrix Market file.
    @param message <str>:
        What went wrong
    @param lineno <int>:
        1-based line number in the offending file, if known
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class DimensionError(WaldoError, ValueError):
    """Operand shapes or lengths do not agree."""


class AdmissionError(WaldoError, ValueError):
    """Matrix does not satisfy the admission rule of the requested game."""


class StepCapExceeded(WaldoError, RuntimeError):
    """A random walk ran past the safety cap on its number of steps."""


class BreakdownError(WaldoError, ArithmeticError):
    """Zero or nonpositive pivot, or a zero entry in the D factor."""


class SizeMatchError(WaldoError, RuntimeError):
    """ICT parameter search did not reach the requested factor size."""


def fatal(*message, exitcode=1, **kwargs):
    """Prints any provided args to standard error
    and exits with the given exit code (default 1).
    @param message <any>:
        Values printed to standard error
    @param exitcode <int>:
        Exit status handed to sys.exit()
    @params kwargs <print()>
        Key words to modify print function behavior
    """
    err(*message, **kwargs)
    sys.exit(exitcode)


def err(*message, **kwargs):
    """Prints any provided args to standard error.
    kwargs can be provided to modify print functions
    behavior.
    @param message <any>:
        Values printed to standard error
    @params kwargs <print()>
        Key words to modify print function behavior
    """
    print(*message, file=sys.stderr, **kwargs)
