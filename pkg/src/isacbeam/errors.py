"""Error types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, infeasible designs with 3, numerical failures with 4.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown key, bad value, missing file."""


class InfeasibleError(RuntimeError):
    """The requested design cannot be met (negative powers, rate gap)."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class NumericalError(RuntimeError):
    """Numerical degeneracy: singular Fisher matrix, zero-row retraction."""
