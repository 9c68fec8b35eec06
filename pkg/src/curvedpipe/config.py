"""Scenario schema and builders.

A scenario is one JSON document; every field is validated before any
computation and errors carry the dotted path of the offending field.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .discretize import DeltaSourceGrid, build_grid
from .eos import GammaLaw, PreissmannLaw, State
from .errors import ConfigError
from .fronttrack import Piecewise, SolverParams, stationary_with_pulse
from .geometry import (
    ArcSegment,
    ConstantF,
    LinearKappa,
    PipeGeometry,
    ProfileSegment,
    SourceCoefficients,
    StraightSegment,
    TabulatedF,
    TabulatedKappa,
)

Vec3 = tuple[float, float, float]
StatePair = tuple[float, float]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- law ---------------------------------------------------------------------


class GammaLawSpec(_Model):
    kind: Literal["gamma"]
    gamma: float = Field(1.4, ge=1.0)
    rho_ref: float = Field(1.0, gt=0)


class PreissmannSpec(_Model):
    kind: Literal["preissmann"]
    radius: float = Field(1.0, gt=0)
    slot_width: float = Field(0.1, gt=0)
    g: float = Field(9.81, gt=0)
    rho_ref: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _slot(self):
        if not self.slot_width < self.radius:
            raise ValueError("slot_width must be smaller than radius")
        return self


LawSpec = Annotated[Union[GammaLawSpec, PreissmannSpec], Field(discriminator="kind")]


# -- geometry ----------------------------------------------------------------


class StraightSpec(_Model):
    type: Literal["straight"]
    length: float = Field(gt=0)
    direction: Optional[Vec3] = None


class ArcSpec(_Model):
    type: Literal["arc"]
    length: float = Field(gt=0)
    radius: float = Field(gt=0)
    normal: Optional[Vec3] = None
    direction: Optional[Vec3] = None


class ProfileSpec(_Model):
    type: Literal["profile"]
    length: float = Field(gt=0)
    s: list[float]
    curvature: list[float]
    normal: Optional[Vec3] = None
    direction: Optional[Vec3] = None

    @model_validator(mode="after")
    def _table(self):
        if len(self.s) != len(self.curvature) or len(self.s) < 2:
            raise ValueError("s and curvature need equal length >= 2")
        if any(k < 0 for k in self.curvature):
            raise ValueError("curvature values must be non-negative")
        return self


SegmentSpec = Annotated[Union[StraightSpec, ArcSpec, ProfileSpec], Field(discriminator="type")]


class GeometrySpec(_Model):
    x_start: float = 0.0
    initial_direction: Vec3 = (1.0, 0.0, 0.0)
    final_direction: Optional[Vec3] = None
    segments: list[SegmentSpec] = []


# -- coefficients --------------------------------------------------------------


class ConstantFSpec(_Model):
    kind: Literal["constant"]
    value: float = Field(ge=0)


class TableFSpec(_Model):
    kind: Literal["table"]
    x: list[float]
    values: list[float]

    @field_validator("values")
    @classmethod
    def _nonneg(cls, v):
        if any(a < 0 for a in v):
            raise ValueError("friction values must be non-negative")
        return v


class LinearKappaSpec(_Model):
    kind: Literal["linear"]
    slope: float = Field(1.0, ge=0)


class TableKappaSpec(_Model):
    kind: Literal["table"]
    xi: list[float]
    values: list[float]


class CoefficientsSpec(_Model):
    f: Annotated[Union[ConstantFSpec, TableFSpec], Field(discriminator="kind")] = ConstantFSpec(
        kind="constant", value=0.0)
    kappa: Annotated[Union[LinearKappaSpec, TableKappaSpec], Field(discriminator="kind")] = \
        LinearKappaSpec(kind="linear", slope=1.0)
    g: float = Field(9.81, ge=0)


# -- initial datum ---------------------------------------------------------------


class RiemannSpec(_Model):
    kind: Literal["riemann"]
    x0: float = 0.0
    left: StatePair
    right: StatePair


class PerturbationSpec(_Model):
    shape: Literal["box", "bump"] = "box"
    a: float
    b: float
    drho: float = 0.0
    dq: float = 0.0
    random: bool = False
    sample_dx: float = Field(0.05, gt=0)

    @model_validator(mode="after")
    def _interval(self):
        if not self.a < self.b:
            raise ValueError("perturbation needs a < b")
        return self


class StationarySpec(_Model):
    kind: Literal["stationary"]
    q: float
    rho_left: float = Field(gt=0)
    perturbation: Optional[PerturbationSpec] = None


class FileSpec(_Model):
    kind: Literal["file"]
    path: str


InitialSpec = Annotated[Union[RiemannSpec, StationarySpec, FileSpec], Field(discriminator="kind")]


# -- solver parameters -------------------------------------------------------------


class ParamsSpec(_Model):
    level: int = Field(4, ge=0, le=20)
    eps_rarefaction: float = Field(1e-2, gt=0)
    eps_nonphysical: float = Field(1e-6, gt=0)
    delta_domain: float = Field(1.0, gt=0)
    t_end: float = Field(1.0, gt=0)
    snapshot_times: list[float] = []
    max_fronts: int = Field(20000, gt=0)
    fv_cells: int = Field(800, ge=2)
    fv_domain: tuple[float, float] = (-5.0, 5.0)
    cfl: float = Field(0.9, gt=0, lt=1)
    window: tuple[float, float] = (-5.0, 5.0)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if not self.eps_nonphysical < self.eps_rarefaction:
            raise ValueError("eps_nonphysical must be smaller than eps_rarefaction")
        if any(t < 0 or t > self.t_end for t in self.snapshot_times):
            raise ValueError("snapshot times must lie in [0, t_end]")
        for name in ("fv_domain", "window"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be an increasing pair")
        return self


class ConvergenceSpec(_Model):
    levels: list[int] = [3, 4, 5, 6, 7]
    eps: list[float] = []
    fv_cells: list[int] = []
    bound: Optional[float] = None


class LipschitzSpec(_Model):
    pairs: int = Field(0, ge=0)
    amplitude: float = Field(1e-3, gt=0)


class Scenario(_Model):
    name: str = "scenario"
    law: LawSpec
    geometry: GeometrySpec = GeometrySpec()
    coefficients: CoefficientsSpec = CoefficientsSpec()
    initial: InitialSpec
    solver: Literal["fronttrack", "fv", "both"] = "fronttrack"
    params: ParamsSpec = ParamsSpec()
    convergence: ConvergenceSpec = ConvergenceSpec()
    lipschitz: LipschitzSpec = LipschitzSpec()
    seed: int = 0
    gnuplot: bool = False


# ---------------------------------------------------------------------------
# loading


def _field_path(err) -> str:
    return ".".join(str(p) for p in err["loc"]) or "<root>"


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = _field_path(first)
        raise ConfigError(first["msg"], path) from exc


BUNDLED = Path(__file__).parent / "scenarios"


def resolve_config_path(path) -> Path:
    """A file path, or the name of a bundled scenario such as ``fig1``."""
    p = Path(path)
    if not p.exists() and (BUNDLED / f"{p.name}.json").exists():
        return BUNDLED / f"{p.name}.json"
    return p


def load_scenario(path) -> tuple[Scenario, dict]:
    path = resolve_config_path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", "<file>") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}", "<file>") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", "<root>")
    return parse_scenario(raw), raw


def config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# builders


def build_law(spec):
    if spec.kind == "gamma":
        return GammaLaw(rho_ref=spec.rho_ref, gamma=spec.gamma)
    return PreissmannLaw(rho_ref=spec.rho_ref, radius=spec.radius, slot_width=spec.slot_width,
                         g=spec.g)


def build_geometry(spec: GeometrySpec) -> PipeGeometry:
    segs = []
    for s in spec.segments:
        if s.type == "straight":
            segs.append(StraightSegment(s.length, s.direction))
        elif s.type == "arc":
            segs.append(ArcSegment(s.length, s.normal, s.direction, radius=s.radius))
        else:
            segs.append(ProfileSegment(s.length, s.normal, s.direction, s_table=tuple(s.s),
                                       k_table=tuple(s.curvature)))
    return PipeGeometry(segs, x_start=spec.x_start, initial_direction=spec.initial_direction,
                        final_direction=spec.final_direction)


def build_coefficients(spec: CoefficientsSpec) -> SourceCoefficients:
    f = ConstantF(spec.f.value) if spec.f.kind == "constant" else TabulatedF(spec.f.x, spec.f.values)
    k = LinearKappa(spec.kappa.slope) if spec.kappa.kind == "linear" else \
        TabulatedKappa(spec.kappa.xi, spec.kappa.values)
    return SourceCoefficients(f, k, g=spec.g)


def build_params(spec: ParamsSpec) -> SolverParams:
    return SolverParams(eps_rarefaction=spec.eps_rarefaction, eps_nonphysical=spec.eps_nonphysical,
                        delta_domain=spec.delta_domain, t_end=spec.t_end,
                        snapshot_times=tuple(spec.snapshot_times), max_fronts=spec.max_fronts)


def _read_datum_file(path) -> Piecewise:
    """CSV with columns ``x, rho, q``; row ``k`` holds on ``[x_k, x_{k+1})``."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((float(row["x"]), float(row["rho"]), float(row["q"])))
    if not rows:
        raise ConfigError(f"{path} holds no rows", "initial.path")
    rows.sort()
    states = [State(r, q) for _, r, q in rows]
    return Piecewise([x for x, _, _ in rows[1:]], states)


def _bump(r):
    return (1.0 - r * r) ** 3 if abs(r) < 1.0 else 0.0


def build_initial(scn: Scenario, law, grid: DeltaSourceGrid, amplitude_scale: float = 1.0,
                  rng=None, base_dir: Path | None = None):
    """Initial datum and the optional sampling triple for callables."""
    ini = scn.initial
    if ini.kind == "riemann":
        return Piecewise.riemann(State(*ini.left), State(*ini.right), ini.x0), None
    if ini.kind == "file":
        p = Path(ini.path)
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        return _read_datum_file(p), None
    pert = ini.perturbation
    if pert is None:
        return stationary_with_pulse(law, grid, ini.q, ini.rho_left, -1.0, -0.5), None
    drho, dq = pert.drho * amplitude_scale, pert.dq * amplitude_scale
    if pert.random:
        rng = rng if rng is not None else np.random.default_rng(scn.seed)
        drho *= float(rng.uniform(-1.0, 1.0))
        dq *= float(rng.uniform(-1.0, 1.0))
    if pert.shape == "box":
        return stationary_with_pulse(law, grid, ini.q, ini.rho_left, pert.a, pert.b, drho, dq), None
    base = stationary_with_pulse(law, grid, ini.q, ini.rho_left, pert.a, pert.b)
    c, w = 0.5 * (pert.a + pert.b), 0.5 * (pert.b - pert.a)

    def fun(x):
        u = base.at(x)
        s = _bump((x - c) / w)
        return State(u.rho + drho * s, u.q + dq * s)

    lo = min(pert.a, grid.positions[0] if grid.points else pert.a)
    hi = max(pert.b, grid.positions[-1] if grid.points else pert.b)
    return fun, (lo - pert.sample_dx, hi + pert.sample_dx, pert.sample_dx)


def build_all(scn: Scenario, level: int | None = None):
    """Law, geometry, coefficients and the point-source grid of a scenario.

    Construction failures are reported as ``ConfigError`` naming the section.
    """
    steps = (("law", lambda: build_law(scn.law)),
             ("geometry", lambda: build_geometry(scn.geometry)),
             ("coefficients", lambda: build_coefficients(scn.coefficients)))
    built = []
    for name, fn in steps:
        try:
            built.append(fn())
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), name) from exc
    law, geom, coeffs = built
    try:
        grid = build_grid(geom, coeffs, scn.params.level if level is None else level)
    except ValueError as exc:
        raise ConfigError(str(exc), "params.level") from exc
    return law, geom, coeffs, grid


def finite_or_none(x):
    return x if isinstance(x, (int, float)) and math.isfinite(x) else None
