"""Exception hierarchy.

The CLI maps these onto exit codes: ``SolverDomainError`` subclasses exit
with 1, ``ConfigError`` with 2 and ``InstabilityError`` with 3.
"""


class CurvedPipeError(Exception):
    """Base class for all library errors."""


class ConfigError(CurvedPipeError):
    """Invalid scenario configuration."""

    def __init__(self, message, field_path=""):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


class SolverDomainError(CurvedPipeError, ValueError):
    """A computation left the admissible state or parameter range."""


class DomainError(SolverDomainError):
    """Argument outside the admissible range (e.g. non-positive density)."""


class DegenerateLawError(SolverDomainError):
    """Pressure law with vanishing sound speed."""


class SolverRangeError(SolverDomainError):
    """A root finder could not bracket a solution in the admissible range."""


class OutsideDomainError(SolverDomainError):
    """No subsonic solution near the data (too far from a stationary state)."""


class NoSubsonicSolutionError(OutsideDomainError):
    """A stationary jump has no subsonic right state."""


class SonicApproachError(SolverDomainError):
    """Stationary integration approached the sonic line."""


class ReparametrizationError(SolverDomainError):
    """Sampled curve is not parametrised by arc length."""


class RefinementError(SolverDomainError):
    """A kink is not representable on the requested dyadic level."""


class GeometryError(SolverDomainError):
    """Invalid pipe geometry."""


class InstabilityError(CurvedPipeError):
    """Front count, total variation or time step guard tripped."""
