"""Isentropic flow in curved pipes: Riemann solvers with kink junctions,
stationary profiles, point-source discretization and wave-front tracking."""

__version__ = "0.1.0"

from .eos import GammaLaw, PreissmannLaw, PressureLaw, State
from .errors import (
    ConfigError,
    CurvedPipeError,
    DomainError,
    InstabilityError,
    OutsideDomainError,
    SolverDomainError,
)
from .geometry import (
    ArcSegment,
    ConstantF,
    LinearKappa,
    PipeGeometry,
    ProfileSegment,
    SourceCoefficients,
    StraightSegment,
)

__all__ = [
    "__version__",
    "State",
    "PressureLaw",
    "GammaLaw",
    "PreissmannLaw",
    "PipeGeometry",
    "StraightSegment",
    "ArcSegment",
    "ProfileSegment",
    "SourceCoefficients",
    "ConstantF",
    "LinearKappa",
    "CurvedPipeError",
    "ConfigError",
    "SolverDomainError",
    "DomainError",
    "OutsideDomainError",
    "InstabilityError",
]
