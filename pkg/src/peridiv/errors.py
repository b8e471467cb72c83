"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
NumericError -> 3, CertificationError -> 4.
"""


class PeridivError(Exception):
    """Base class for all package errors."""


class ConfigError(PeridivError):
    """Invalid configuration file or invalid user-supplied parameters."""


class NumericError(PeridivError):
    """A numerical procedure failed (root bracketing, quadrature, ...)."""


class CertificationError(PeridivError):
    """An optimality certification check failed.

    Carries the offending report in ``report`` when available.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
