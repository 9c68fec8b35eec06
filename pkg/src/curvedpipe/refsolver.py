"""First-order finite-volume reference solver.

Rusanov fluxes with transmissive boundaries, Strang splitting of the
distributed source, and a symmetric split of the kink momentum jump at the
interface carrying the kink.  Used only as an independent cross-check of
front tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eos import GammaLaw, PressureLaw, State
from .errors import GeometryError, InstabilityError
from .fronttrack import Piecewise, Snapshot
from .geometry import PipeGeometry, SourceCoefficients, kink_jump_magnitude

__all__ = ["FVGrid", "fv_run", "cell_averages"]


@dataclass(frozen=True)
class FVGrid:
    x_lo: float
    x_hi: float
    cells: int
    cfl: float = 0.9

    def __post_init__(self):
        if not self.x_hi > self.x_lo:
            raise ValueError("empty domain")
        if self.cells < 2:
            raise ValueError("need at least two cells")
        if not 0 < self.cfl < 1:
            raise ValueError("CFL number must lie in (0, 1)")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.cells) + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        return self.x_lo + np.arange(self.cells + 1) * self.dx

    def interface_index(self, x: float) -> int:
        k = (x - self.x_lo) / self.dx
        j = int(round(k))
        if abs(k - j) > 1e-9 or not 0 < j < self.cells:
            raise GeometryError(f"kink at x = {x} is not an interior cell interface")
        return j


def _pressure(law: PressureLaw, rho):
    if isinstance(law, GammaLaw):
        return rho ** law.gamma
    return np.vectorize(law._p, otypes=[float])(rho)


def _sound(law: PressureLaw, rho):
    if isinstance(law, GammaLaw):
        if law.isothermal:
            return np.ones_like(rho)
        return np.sqrt(law.gamma * rho ** (law.gamma - 1.0))
    return np.sqrt(np.vectorize(law._dp, otypes=[float])(rho))


def cell_averages(u0, grid: FVGrid):
    """Cell averages of a datum: exact for :class:`Piecewise`, midpoint otherwise."""
    edges = grid.interfaces
    if isinstance(u0, Piecewise):
        rho = np.empty(grid.cells)
        q = np.empty(grid.cells)
        br = np.asarray(u0.breaks)
        for i in range(grid.cells):
            a, b = edges[i], edges[i + 1]
            pts = np.concatenate(([a], br[(br > a) & (br < b)], [b]))
            mids = 0.5 * (pts[:-1] + pts[1:])
            w = np.diff(pts) / (b - a)
            st = [u0.at(m) for m in mids]
            rho[i] = float(np.dot(w, [s[0] for s in st]))
            q[i] = float(np.dot(w, [s[1] for s in st]))
        return rho, q
    if hasattr(u0, "rho") and hasattr(u0, "q") and callable(getattr(u0, "rho")):
        xs = grid.centers
        return np.asarray(u0.rho(xs), dtype=float), np.full(grid.cells, float(u0.q))
    states = [u0(x) for x in grid.centers]
    return np.array([s[0] for s in states], float), np.array([s[1] for s in states], float)


def _rusanov(law, rho, q):
    p = _pressure(law, rho)
    v = q / rho
    a = np.abs(v) + _sound(law, rho)
    rl, rr = rho[:-1], rho[1:]
    ql, qr = q[:-1], q[1:]
    Pl, Pr = ql * v[:-1] + p[:-1], qr * v[1:] + p[1:]
    s = np.maximum(a[:-1], a[1:])
    fm = 0.5 * (ql + qr) - 0.5 * s * (rr - rl)
    fq = 0.5 * (Pl + Pr) - 0.5 * s * (qr - ql)
    return fm, fq, float(a.max())


def _hyperbolic(law, rho, q, dt, dx, kink_idx, kink_cq):
    # ghost cells copy the boundary cells (transmissive)
    rg = np.concatenate(([rho[0]], rho, [rho[-1]]))
    qg = np.concatenate(([q[0]], q, [q[-1]]))
    fm, fq, _ = _rusanov(law, rg, qg)
    # fq[k] is the flux through interface k (between cells k-1 and k)
    fq_left = fq.copy()   # as seen by the cell left of the interface
    fq_right = fq.copy()  # as seen by the cell right of the interface
    if kink_idx.size:
        half = 0.5 * kink_cq * fm[kink_idx]
        fq_left[kink_idx] -= half
        fq_right[kink_idx] += half
    lam = dt / dx
    rho_new = rho - lam * (fm[1:] - fm[:-1])
    q_new = q - lam * (fq_left[1:] - fq_right[:-1])
    return rho_new, q_new


def _source(rho, q, a, b, dt):
    """Exact solution of ``q' = -a q - b rho`` at fixed ``rho``."""
    decay = np.exp(-a * dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(a > 0, -np.expm1(-a * dt) / np.where(a > 0, a, 1.0), dt)
    return q * decay - b * rho * gain


def fv_run(law: PressureLaw, geometry: PipeGeometry, coeffs: SourceCoefficients, u0,
           t_end: float, grid: FVGrid, snapshot_times=(), max_steps: int = 10_000_000):
    """Evolve ``u0`` to ``t_end``; returns snapshots in the front-tracking format.

    Raises
    ------
    InstabilityError
        On non-positive density, non-finite values or a vanishing time step.
    """
    rho, q = cell_averages(u0, grid)
    if np.any(rho <= 0):
        raise InstabilityError("initial datum has non-positive density")
    xs = grid.centers
    a_src = np.array([coeffs.f(x) * coeffs.kappa(geometry.curvature(x)) for x in xs])
    b_src = np.array([coeffs.g * geometry.sin_inclination(x) for x in xs])
    kink_idx = np.array([grid.interface_index(k.x) for k in geometry.kinks], dtype=int)
    kink_cq = np.array([coeffs.f(k.x) * coeffs.kappa(kink_jump_magnitude(k.theta))
                        for k in geometry.kinks], dtype=float)
    targets = sorted({float(t) for t in snapshot_times if 0 <= t <= t_end} | {float(t_end)})
    snaps = []
    t = 0.0
    dx = grid.dx
    steps = 0
    for target in targets:
        while t < target:
            a = np.abs(q / rho) + _sound(law, rho)
            amax = float(a.max())
            if not math.isfinite(amax) or amax <= 0:
                raise InstabilityError(f"non-finite wave speed at t = {t:.6g}")
            dt = min(grid.cfl * dx / amax, target - t)
            if dt <= 1e-14 * max(1.0, target):
                t = target
                break
            rho, q = _hyperbolic(law, rho, q, 0.5 * dt, dx, kink_idx, kink_cq)
            q = _source(rho, q, a_src, b_src, dt)
            rho, q = _hyperbolic(law, rho, q, 0.5 * dt, dx, kink_idx, kink_cq)
            if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(q))) or np.any(rho <= 0):
                raise InstabilityError(f"negative density or non-finite state at t = {t:.6g}")
            t += dt
            steps += 1
            if steps > max_steps:
                raise InstabilityError("step cap exceeded")
        snaps.append(_to_snapshot(grid, target, rho, q))
    return snaps


def _to_snapshot(grid, t, rho, q) -> Snapshot:
    return Snapshot(t, grid.interfaces[1:-1].copy(), rho.copy(), q.copy())


def stationary_state_array(snap: Snapshot):
    return [State(float(r), float(m)) for r, m in zip(snap.rho, snap.q)]
