"""Exception hierarchy shared across the solvers and the CLI.

The CLI maps these to exit codes: ConfigError -> 2, InstabilityError and
StiffnessError -> 3, InvariantViolation -> 4.
"""


class TcsflockError(Exception):
    pass


class ConfigError(TcsflockError):
    """Invalid configuration file, key, or parameter combination."""


class DimensionError(TcsflockError):
    """Mismatched grid sizes or array lengths."""


class DomainError(TcsflockError):
    """State left its admissible domain (e.g. non-positive internal variable)."""


class PositivityError(TcsflockError):
    """Density fell below the positivity floor."""


class StiffnessError(TcsflockError):
    """Step-size control underflowed; the problem needs a larger epsilon or
    the implicit relaxation path."""


class InstabilityError(TcsflockError):
    """NaN or runaway values detected in a solver state."""


class InvariantViolation(TcsflockError):
    """A stored run failed re-verification of its invariants."""


class FitError(TcsflockError):
    """Decay-rate fit is ill-posed on the requested window."""
