"""Exception types shared across the package.

Each class maps to a distinct process exit code in :mod:`vadg.cli`.
"""


class VadgError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(VadgError, ValueError):
    """Invalid parameters or malformed configuration."""

    exit_code = 2


class SolverError(VadgError, RuntimeError):
    """An iterative solver did not converge.

    Parameters
    ----------
    message : str
        Human readable description.
    index : int, optional
        Node or step index where the failure happened.
    residual : float, optional
        Last residual or increment norm.
    """

    exit_code = 3

    def __init__(self, message, index=None, residual=None):
        super().__init__(message)
        self.index = index
        self.residual = residual


class BlowUpError(VadgError, FloatingPointError):
    """The solution became non-finite or exceeded the blow-up threshold."""

    exit_code = 4

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
