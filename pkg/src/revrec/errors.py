"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI uses when it escapes.
"""


class RevrecError(Exception):
    exit_code = 1


class ConfigurationError(RevrecError, ValueError):
    """Bad parameters or an unusable configuration."""

    exit_code = 2


class DataError(RevrecError, ValueError):
    """Input records are missing, malformed or insufficient."""

    exit_code = 3


class NumericalError(RevrecError, ArithmeticError):
    """A training procedure produced a non-finite value."""

    exit_code = 4
