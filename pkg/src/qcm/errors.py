"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class QcmError(Exception):
    exit_code = 2


class InputError(QcmError, ValueError):
    """Malformed or inconsistent input (bad file, unknown node, mismatched signature)."""

    exit_code = 2


class ResourceError(QcmError):
    """A computation would exceed a hard size cap."""

    exit_code = 3


class UndefinedQueryError(QcmError):
    """The requested causal query has no defined value (e.g. conditioning on probability zero)."""

    exit_code = 4


class UnsupportedShapeError(QcmError):
    """The graph shape is outside what a closed-form rule or generator covers."""

    exit_code = 5


class SearchFailedError(InputError):
    """No fiducial found within budget. Not evidence that none exists."""

    def __init__(self, message, best_potential):
        super().__init__(message)
        self.best_potential = best_potential


class NotQuantumError(InputError):
    """Statistics that no quantum functional model could have produced."""


class SimulationError(QcmError):
    """Internal consistency failure during exact simulation."""

    exit_code = 3
