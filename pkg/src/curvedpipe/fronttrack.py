"""Wave-front tracking for the p-system with point sources.

The solution is piecewise constant in ``x`` at every time.  Discontinuities
(fronts) move with constant speed until two of them meet; the collision is
then resolved by a Riemann solver and new fronts are emitted.  Source
points of a :class:`~curvedpipe.discretize.DeltaSourceGrid` carry pinned
*zero waves*.

Every front moves with the speed ``[q]/[rho]`` computed from its own
states, so ``int rho`` is conserved to round-off.  Weak interactions use a
simplified solver:

* a weak wave crossing a source point is transmitted without reflection;
  the zero wave keeps ``[q] = 0`` and absorbs the small defect in ``[P]``
  (it is released again by the next accurate interaction at that point);
* two weak waves of one family merge into one wave plus a non-physical
  front travelling at ``lambda_np``, which in turn crosses every front it
  meets without creating new waves.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .discretize import DeltaSourceGrid, discrete_stationary
from .eos import PressureLaw, State, check_state
from .errors import DomainError, InstabilityError, OutsideDomainError, SolverDomainError
from .riemann import (
    BACKWARD,
    FORWARD,
    RAREFACTION,
    SHOCK,
    ZERO,
    curve_state,
    curve_velocity,
    mass_speed,
    solve_classical,
    solve_point,
)

__all__ = [
    "SolverParams",
    "Piecewise",
    "stationary_with_pulse",
    "Front",
    "FTState",
    "Snapshot",
    "Trajectory",
    "initialize",
    "next_event",
    "resolve",
    "run",
    "evolve",
    "glimm_potential",
    "l1_distance",
    "mass_functional",
    "weak_solution_residual",
    "BumpTestFunction",
    "WeakResidual",
    "check_consistency",
]

NONPHYSICAL = "nonphysical"
COLLISION_GUARD = 1e-13


@dataclass(frozen=True)
class SolverParams:
    eps_rarefaction: float = 1e-2
    eps_nonphysical: float = 1e-6
    delta_domain: float = 1.0
    t_end: float = 1.0
    snapshot_times: tuple = ()
    max_fronts: int = 20000
    max_events: int = 2_000_000
    tv_cap: float | None = None

    def __post_init__(self):
        for name in ("eps_rarefaction", "eps_nonphysical", "delta_domain", "t_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.eps_nonphysical < self.eps_rarefaction:
            raise ValueError("eps_nonphysical must be smaller than eps_rarefaction")

    @property
    def tv_limit(self) -> float:
        return self.tv_cap if self.tv_cap is not None else 4.0 * self.delta_domain


@dataclass
class Piecewise:
    """Piecewise constant datum: ``states[k]`` holds on ``(breaks[k-1], breaks[k])``."""

    breaks: list
    states: list

    def __post_init__(self):
        self.breaks = [float(b) for b in self.breaks]
        self.states = [check_state(u) for u in self.states]
        if len(self.states) != len(self.breaks) + 1:
            raise ValueError("need len(states) == len(breaks) + 1")
        if any(b <= a for a, b in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")

    def at(self, x) -> State:
        i = int(np.searchsorted(self.breaks, x, side="right"))
        return self.states[i]

    def add_box(self, a, b, drho=0.0, dq=0.0) -> "Piecewise":
        """Copy with ``(drho, dq)`` added on ``(a, b)``."""
        breaks = sorted(set(self.breaks) | {float(a), float(b)})
        cells = [self.at(breaks[0] - 1.0)]
        for x0, x1 in zip(breaks, breaks[1:]):
            u = self.at(0.5 * (x0 + x1))
            if a <= x0 and x1 <= b:
                u = State(u.rho + drho, u.q + dq)
            cells.append(u)
        cells.append(self.at(breaks[-1] + 1.0))
        return Piecewise(breaks, cells)

    @classmethod
    def constant(cls, u):
        return cls([], [u])

    @classmethod
    def riemann(cls, u_l, u_r, x0=0.0):
        return cls([x0], [u_l, u_r])

    @classmethod
    def from_function(cls, fun, a, b, dx, extra_breaks=()):
        """Midpoint samples of ``fun`` on cells of width <= ``dx`` covering ``[a, b]``.

        ``extra_breaks`` inside ``[a, b]`` are kept as cell boundaries.
        """
        m = max(1, int(math.ceil((b - a) / dx)))
        br = set(np.linspace(a, b, m + 1).tolist())
        br.update(x for x in extra_breaks if a <= x <= b)
        br = sorted(br)
        states = [fun(a - 1.0)]
        for x0, x1 in zip(br, br[1:]):
            states.append(fun(0.5 * (x0 + x1)))
        states.append(fun(b + 1.0))
        return cls(br, states)


def stationary_with_pulse(law: PressureLaw, grid: DeltaSourceGrid, q: float, rho_left: float,
                          a: float, b: float, drho: float = 0.0, dq: float = 0.0) -> Piecewise:
    """Discrete stationary datum with ``(drho, dq)`` added on ``(a, b)``."""
    if not a < b:
        raise ValueError("pulse interval must satisfy a < b")
    xs, states = discrete_stationary(law, grid, q, rho_left)
    return Piecewise(list(xs), states).add_box(a, b, drho, dq)


# ---------------------------------------------------------------------------
# fronts


_ids = itertools.count()


class Front:
    __slots__ = ("id", "x0", "t0", "speed", "kind", "family", "ul", "ur", "point",
                 "generation", "left", "right", "alive")

    def __init__(self, x0, t0, speed, kind, family, ul, ur, point=None, generation=0):
        self.id = next(_ids)
        self.x0 = x0
        self.t0 = t0
        self.speed = speed
        self.kind = kind
        self.family = family
        self.ul = ul
        self.ur = ur
        self.point = point
        self.generation = generation
        self.left = None
        self.right = None
        self.alive = True

    def x(self, t):
        return self.x0 + self.speed * (t - self.t0)

    @property
    def strength(self):
        return abs(self.ur[0] - self.ul[0]) + abs(self.ur[1] - self.ul[1])

    @property
    def moving(self):
        return self.kind != ZERO

    def __repr__(self):
        return (f"Front({self.kind}{self.family if self.family > 0 else ''} x0={self.x0:.6g} "
                f"t0={self.t0:.6g} s={self.speed:.6g} id={self.id})")


@dataclass
class Snapshot:
    """Piecewise constant state at time ``t``."""

    t: float
    xs: np.ndarray
    rho: np.ndarray
    q: np.ndarray

    def state_at(self, x) -> State:
        i = int(np.searchsorted(self.xs, x, side="right"))
        return State(float(self.rho[i]), float(self.q[i]))

    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.rho)) + np.abs(np.diff(self.q))))


@dataclass
class FTState:
    law: PressureLaw
    grid: DeltaSourceGrid
    params: SolverParams
    t: float
    head: Front | None
    left_state: State
    right_state: State
    lam_np: float
    heap: list = field(default_factory=list)
    history: list = field(default_factory=list)
    events: list = field(default_factory=list)
    n_fronts: int = 0
    wave_tv: float = 0.0
    interactions: int = 0
    mass0: float = 0.0
    mass_scale: float = 1.0
    births: dict = field(default_factory=dict)

    def fronts(self):
        f = self.head
        while f is not None:
            yield f
            f = f.right

    def snapshot(self, t=None) -> Snapshot:
        t = self.t if t is None else t
        fr = list(self.fronts())
        xs = np.array([f.x(t) for f in fr], dtype=float)
        states = [self.left_state] + [f.ur for f in fr]
        return Snapshot(t, xs, np.array([u[0] for u in states]), np.array([u[1] for u in states]))


@dataclass
class Trajectory:
    snapshots: list
    events: list
    history: list
    t_end: float
    left_state: State
    right_state: State
    grid: DeltaSourceGrid
    law: PressureLaw
    stats: dict = field(default_factory=dict)

    def snapshot_at(self, t) -> Snapshot:
        """Reconstruct the piecewise constant state at any ``t`` in ``[0, t_end]``."""
        for s in self.snapshots:
            if s.t == t:
                return s
        if not 0 <= t <= self.t_end:
            raise DomainError(f"time {t} outside [0, {self.t_end}]")
        alive = [h for h in self.history if h["t_birth"] <= t and
                 (t < h["t_death"] or (t == self.t_end and h["t_death"] == self.t_end))]
        alive.sort(key=lambda h: (h["x0"] + h["speed"] * (t - h["t0"]), h["order"]))
        xs = np.array([h["x0"] + h["speed"] * (t - h["t0"]) for h in alive])
        states = [self.left_state] + [h["ur"] for h in alive]
        return Snapshot(t, xs, np.array([u[0] for u in states]), np.array([u[1] for u in states]))

    def wave_diagram(self):
        """Front polylines ``[(t0, x0), (t1, x1)]`` in the t-x plane, numbered by creation."""
        out = []
        rank = {i: k for k, i in enumerate(sorted(h["id"] for h in self.history))}
        for h in sorted(self.history, key=lambda h: h["id"]):
            tb, td = h["t_birth"], h["t_death"]
            xb = h["x0"] + h["speed"] * (tb - h["t0"])
            xd = h["x0"] + h["speed"] * (td - h["t0"])
            out.append({"id": rank[h["id"]], "kind": h["kind"], "family": h["family"],
                        "points": [(tb, xb), (td, xd)]})
        return out


# ---------------------------------------------------------------------------
# diagnostics


def mass_functional(snap: Snapshot) -> float:
    """``int (rho - rho_ambient) dx + t (q_right - q_left)``, invariant in time.

    ``rho_ambient`` equals the left far-field density for ``x < 0`` and the
    right one for ``x > 0``.
    """
    jumps = snap.rho[:-1] - snap.rho[1:]
    return math.fsum((snap.xs * jumps).tolist()) + snap.t * (snap.q[-1] - snap.q[0])


def _active_mass(snap: Snapshot, lo, hi) -> float:
    """``int_lo^hi rho dx`` for a snapshot."""
    edges = np.concatenate(([lo], np.clip(snap.xs, lo, hi), [hi]))
    return float(np.sum(snap.rho * np.diff(edges)))


def l1_distance(a, b, t=None, window=None) -> float:
    """Exact L1 distance ``int |drho| + |dq|`` between piecewise constant states.

    ``a`` and ``b`` are snapshots or trajectories (then ``t`` selects the
    time).  Without a window, different far-field states give ``inf``.
    """
    if isinstance(a, Trajectory):
        a = a.snapshot_at(t)
    if isinstance(b, Trajectory):
        b = b.snapshot_at(t)
    xs = np.union1d(a.xs, b.xs)
    if window is not None:
        lo, hi = window
        xs = np.clip(xs, lo, hi)
        xs = np.unique(np.concatenate(([lo], xs, [hi])))
    if xs.size == 0:
        return 0.0 if window is None and _same_far(a, b, 0) and _same_far(a, b, -1) else \
            (math.inf if window is None else 0.0)
    mids = 0.5 * (xs[:-1] + xs[1:])
    ia = np.searchsorted(a.xs, mids, side="right")
    ib = np.searchsorted(b.xs, mids, side="right")
    diff = np.abs(a.rho[ia] - b.rho[ib]) + np.abs(a.q[ia] - b.q[ib])
    total = float(np.sum(diff * np.diff(xs)))
    if window is None and not (_same_far(a, b, 0) and _same_far(a, b, -1)):
        return math.inf
    return total


def _same_far(a, b, i):
    return a.rho[i] == b.rho[i] and a.q[i] == b.q[i]


def glimm_potential(state: FTState) -> float:
    """Quadratic interaction potential plus source-weighted linear term."""
    fr = [f for f in state.fronts() if f.moving and f.kind != NONPHYSICAL]
    sig = np.array([f.strength for f in fr], dtype=float)
    fam = np.array([f.family for f in fr], dtype=int)
    shock = np.array([f.kind == SHOCK for f in fr], dtype=bool)
    Q = 0.0
    # 2-front on the left of a 1-front
    c2 = 0.0
    for s, k in zip(sig, fam):
        if k == 1:
            Q += c2 * s
        else:
            c2 += s
    # same family, at least one shock: all pairs minus rarefaction pairs
    for k in (1, 2):
        m = fam == k
        tot = sig[m].sum()
        rar = sig[m & ~shock].sum()
        Q += 0.5 * (tot ** 2 - np.sum(sig[m] ** 2)) - 0.5 * (rar ** 2 - np.sum(sig[m & ~shock] ** 2))
    pts = state.grid.points
    if pts:
        px = np.array([p.x for p in pts])
        w = np.cumsum([p.weight for p in pts])
        total = w[-1]
        for f, s in zip(fr, sig):
            x = f.x(state.t)
            i = int(np.searchsorted(px, x, side="left"))
            ahead = total - (w[i - 1] if i > 0 else 0.0) if f.family == 2 else (w[i - 1] if i > 0 else 0.0)
            Q += s * ahead
    return float(Q)


# ---------------------------------------------------------------------------
# emission


def _check_subsonic(law, u, where):
    rho, q = u
    if not rho > 0 or not abs(q / rho) < law.c(rho):
        raise OutsideDomainError(f"state ({rho:.6g}, {q:.6g}) left the subsonic region {where}")


def _fronts_from_pattern(state: FTState, pattern, x, t, gen, point=None):
    """Turn a wave pattern into fronts, splitting rarefactions into fans."""
    law, eps = state.law, state.params.eps_rarefaction
    out = []
    for w in pattern.waves:
        if w.kind == ZERO:
            out.append(Front(x, t, 0.0, ZERO, 0, w.left, w.right, point, gen))
            continue
        if w.kind == SHOCK:
            out.append(Front(x, t, w.speed_lo, SHOCK, w.family, w.left, w.right, None, gen))
            continue
        d = w.right.rho - w.left.rho
        m = max(1, int(math.ceil(abs(d) / eps)))
        prev = w.left
        for i in range(1, m + 1):
            u = w.right if i == m else curve_state(law, FORWARD, w.family, w.left, w.left.rho + d * i / m)
            s = mass_speed(law, w.family, prev, u)
            out.append(Front(x, t, s, RAREFACTION, w.family, prev, u, None, gen))
            prev = u
    return out


def _wave_front(law, family, ul, ur, x, t, gen):
    """Single front of ``family`` joining two states of one Lax curve."""
    if ul == ur:
        return None
    compressive = ur[0] > ul[0] if family == 1 else ur[0] < ul[0]
    kind = SHOCK if compressive else RAREFACTION
    return Front(x, t, mass_speed(law, family, ul, ur), kind, family, State(*ul), State(*ur), None, gen)


def _np_front(state, ul, ur, x, t, gen):
    if ul == ur:
        return None
    return Front(x, t, state.lam_np, NONPHYSICAL, -1, State(*ul), State(*ur), None, gen)


def _solve_monotone(fun, x0, lo_lim, hi_lim):
    """Root of a monotone scalar function near ``x0``."""
    f0 = fun(x0)
    if f0 == 0.0:
        return x0
    lo = hi = x0
    flo = fhi = f0
    step = 1e-6 * x0
    for _ in range(200):
        lo = max(lo - step, lo_lim)
        hi = min(hi + step, hi_lim)
        flo, fhi = fun(lo), fun(hi)
        if flo * f0 <= 0:
            hi, fhi = x0, f0
            break
        if fhi * f0 <= 0:
            lo, flo = x0, f0
            break
        step *= 4.0
    else:
        raise OutsideDomainError("simplified solver could not bracket its root")
    return brentq(fun, lo, hi, xtol=1e-15 * x0, rtol=4 * np.finfo(float).eps, maxiter=200)


def _curve_with_q(law, direction, family, u0, q_target, guess):
    def fun(r):
        v, _ = curve_velocity(law, direction, family, u0, r)
        return r * v - q_target

    r = _solve_monotone(fun, guess, law.rho_min, law.rho_max)
    return State(r, q_target)


def _curve_to_np_line(law, family, u0, ur, lam, guess):
    """State on the forward ``family`` curve from ``u0`` joined to ``ur`` by a
    mass-conserving jump of speed ``lam``."""

    def fun(r):
        v, _ = curve_velocity(law, FORWARD, family, u0, r)
        return (ur[1] - r * v) - lam * (ur[0] - r)

    r = _solve_monotone(fun, guess, law.rho_min, law.rho_max)
    return curve_state(law, FORWARD, family, u0, r)


# ---------------------------------------------------------------------------
# initialization


def _resolve_datum(law, grid, u0, sample_dx):
    from .stationary import StationaryProfile

    if isinstance(u0, Piecewise):
        return u0
    if isinstance(u0, StationaryProfile):
        xs, states = discrete_stationary(law, grid, u0.q, u0.rho_left)
        return Piecewise(list(xs), states)
    if callable(u0):
        if sample_dx is None:
            raise ValueError("a callable datum needs sample_dx and support")
        a, b, dx = sample_dx
        return Piecewise.from_function(u0, a, b, dx, extra_breaks=grid.positions)
    raise TypeError("unsupported initial datum")


def initialize(law: PressureLaw, grid: DeltaSourceGrid, u0, params: SolverParams,
               sample_dx=None) -> FTState:
    """Build the initial front configuration.

    ``u0`` is a :class:`Piecewise` datum, a stationary profile (replaced by the
    stationary solution of the point-source system with the same momentum and
    left far-field density) or a callable sampled on ``sample_dx = (a, b, dx)``.
    """
    datum = _resolve_datum(law, grid, u0, sample_dx)
    pts = {p.x: p for p in grid.points}
    breaks = sorted(set(datum.breaks) | set(pts))
    # cell states: datum on each open interval between breaks
    cells = [datum.at(breaks[0] - 1.0) if breaks else datum.states[0]]
    for a, b in zip(breaks, breaks[1:]):
        cells.append(datum.at(0.5 * (a + b)))
    if breaks:
        cells.append(datum.at(breaks[-1] + 1.0))
    for u in cells:
        _check_subsonic(law, u, "in the initial datum")
    vmax = max(abs(u[1] / u[0]) + law.c(u[0]) for u in cells)
    st = FTState(law, grid, params, 0.0, None, cells[0], cells[-1], lam_np=2.0 * vmax)
    fronts = []
    tv = 0.0
    for i, x in enumerate(breaks):
        ul, ur = cells[i], cells[i + 1]
        p = pts.get(x)
        try:
            if p is not None:
                pat = solve_point(law, ul, ur, p.jump)
            elif ul == ur:
                continue
            else:
                pat = solve_classical(law, ul, ur)
        except SolverDomainError as exc:
            raise OutsideDomainError(f"initial Riemann problem at x = {x}: {exc}") from exc
        tv += sum(w.strength for w in pat.waves if w.kind != ZERO)
        fronts.extend(_fronts_from_pattern(st, pat, x, 0.0, 0, p))
    if tv > params.delta_domain:
        raise DomainError(
            f"initial wave total variation {tv:.6g} exceeds the budget {params.delta_domain}")
    if len(fronts) > params.max_fronts:
        raise InstabilityError(f"initial front count {len(fronts)} exceeds the cap {params.max_fronts}")
    _link_initial(st, fronts)
    st.wave_tv = sum(f.strength for f in fronts if f.moving)
    snap = st.snapshot()
    st.mass0 = mass_functional(snap)
    lo = min(snap.xs.min(initial=0.0), grid.positions[0] if grid.points else 0.0)
    hi = max(snap.xs.max(initial=0.0), grid.positions[-1] if grid.points else 0.0)
    st.mass_scale = max(1.0, _active_mass(snap, lo, hi))
    return st


def _link_initial(st: FTState, fronts):
    prev = None
    for f in fronts:
        f.left = prev
        if prev is not None:
            prev.right = f
        else:
            st.head = f
        prev = f
        st.births[f.id] = 0.0
    st.n_fronts = len(fronts)
    for f in fronts:
        _schedule(st, f)


# ---------------------------------------------------------------------------
# events


def _collision_time(a: Front, b: Front):
    ds = a.speed - b.speed
    if ds <= 0:
        return math.inf
    return (b.x0 - a.x0 + a.speed * a.t0 - b.speed * b.t0) / ds


def _schedule(st: FTState, f: Front):
    """Push the collision of ``f`` with its right neighbour."""
    g = f.right
    if g is None:
        return
    tc = _collision_time(f, g)
    if not math.isfinite(tc):
        return
    tc = max(tc, st.t, f.t0, g.t0)
    x = g.x0 if g.kind == ZERO else (f.x(tc) if f.kind == ZERO else 0.5 * (f.x(tc) + g.x(tc)))
    if f.kind == ZERO:
        x = f.x0
    heapq.heappush(st.heap, (tc, x, f.id, g.id, f, g))


def _peek(st: FTState):
    while st.heap:
        tc, x, _, _, a, b = st.heap[0]
        if a.alive and b.alive and a.right is b:
            return st.heap[0]
        heapq.heappop(st.heap)
    return None


def next_event(state: FTState):
    """Earliest collision ``(time, fronts)``; ``(inf, [])`` when none remains."""
    e = _peek(state)
    if e is None:
        return math.inf, []
    tc, x, _, _, a, b = e
    return tc, _gather(state, a, b, tc, x)


def _gather(st, a, b, tc, x):
    tol = COLLISION_GUARD * max(1.0, abs(x))
    group = [a, b]
    f = a.left
    while f is not None and abs(f.x(tc) - x) <= tol and f.speed >= group[0].speed:
        group.insert(0, f)
        f = f.left
    f = b.right
    while f is not None and abs(f.x(tc) - x) <= tol and f.speed <= group[-1].speed:
        group.append(f)
        f = f.right
    return group


def _replace(st: FTState, group, new, t):
    left, right = group[0].left, group[-1].right
    for f in group:
        f.alive = False
        st.history.append(_record(st, f, t))
        st.n_fronts -= 1
        if f.moving:
            st.wave_tv -= f.strength
    prev = left
    for f in new:
        f.left = prev
        if prev is not None:
            prev.right = f
        else:
            st.head = f
        prev = f
        st.births[f.id] = t
        st.n_fronts += 1
        if f.moving:
            st.wave_tv += f.strength
    if prev is not None:
        prev.right = right
    else:
        st.head = right
    if right is not None:
        right.left = prev
    if left is not None:
        _schedule(st, left)
    for f in new:
        _schedule(st, f)


def _record(st, f: Front, t_death):
    return {"id": f.id, "order": f.id, "kind": f.kind, "family": f.family, "x0": f.x0,
            "t0": f.t0, "speed": f.speed, "t_birth": st.births.pop(f.id), "t_death": t_death,
            "ul": f.ul, "ur": f.ur, "point": f.point}


def resolve(state: FTState, t: float, group) -> FTState:
    """Replace the colliding ``group`` by the fronts of the local Riemann solution."""
    st, law, prm = state, state.law, state.params
    st.t = t
    zero = next((f for f in group if f.kind == ZERO), None)
    x = zero.x0 if zero is not None else group[0].x(t)
    if zero is None:
        x = 0.5 * (group[0].x(t) + group[-1].x(t))
    gen = max(f.generation for f in group) + 1
    ul, ur = group[0].ul, group[-1].ur
    moving = [f for f in group if f.moving]
    s_in = sum(f.strength for f in moving)
    kind = "accurate"
    new = None
    try:
        if len(group) == 2:
            new, kind = _simplified(st, group, zero, x, t, gen)
        if new is None:
            if zero is not None:
                pat = solve_point(law, ul, ur, zero.point.jump)
                new = _fronts_from_pattern(st, pat, x, t, gen, zero.point)
                kind = "source"
            else:
                pat = solve_classical(law, ul, ur)
                new = _fronts_from_pattern(st, pat, x, t, gen)
                kind = "classical"
        for f in new:
            _check_subsonic(law, f.ur, f"at x = {x:.6g}, t = {t:.6g}")
    except SolverDomainError as exc:
        raise OutsideDomainError(
            f"interaction at x = {x:.6g}, t = {t:.6g} ({kind}): {exc}; "
            f"left state {tuple(ul)}, right state {tuple(ur)}") from exc
    for f in new:
        if f.kind != NONPHYSICAL and abs(f.speed) >= st.lam_np:
            raise InstabilityError("physical front outran the non-physical speed")
    s_out = sum(f.strength for f in new if f.moving)
    _replace(st, group, new, t)
    st.interactions += 1
    st.events.append((t, x, kind, s_in, s_out, len(group), len(new)))
    if st.n_fronts > prm.max_fronts:
        raise InstabilityError(f"front count {st.n_fronts} exceeds the cap {prm.max_fronts}")
    if st.wave_tv > prm.tv_limit:
        raise InstabilityError(f"wave total variation {st.wave_tv:.6g} exceeds {prm.tv_limit}")
    return st


def _simplified(st, group, zero, x, t, gen):
    """Simplified solver for two-front collisions, or ``(None, '')``."""
    law, eps = st.law, st.params.eps_nonphysical
    a, b = group
    ul, ur = a.ul, b.ur
    if a.kind == NONPHYSICAL:
        lam = st.lam_np
        if b.kind == ZERO:
            rho_x = ur[0] - (ur[1] - ul[1]) / lam
            ux = State(rho_x, ul[1])
            _check_subsonic(law, ux, "behind a non-physical front")
            return [Front(x, t, 0.0, ZERO, 0, ul, ux, b.point, gen),
                    _np_front(st, ux, ur, x, t, gen)], "np-source"
        if b.kind == NONPHYSICAL:
            return [_np_front(st, ul, ur, x, t, gen)], "np-merge"
        ux = _curve_to_np_line(law, b.family, ul, ur, lam, b.ur[0])
        out = [_wave_front(law, b.family, ul, ux, x, t, b.generation),
               _np_front(st, ux, ur, x, t, gen)]
        return [f for f in out if f is not None], "np-transmit"
    if zero is not None:
        wave = b if a is zero else a
        if wave.kind == NONPHYSICAL or wave.strength * zero.point.weight >= eps:
            return None, ""
        if a is zero:
            # 1-wave arriving from the right
            uy = _curve_with_q(law, FORWARD, 1, ul, ur[1], wave.ur[0] + (ul[0] - a.ur[0]))
            out = [_wave_front(law, 1, ul, uy, x, t, wave.generation),
                   Front(x, t, 0.0, ZERO, 0, uy, ur, zero.point, gen)]
        else:
            uz = _curve_with_q(law, BACKWARD, 2, ur, ul[1], wave.ul[0] + (ur[0] - b.ul[0]))
            out = [Front(x, t, 0.0, ZERO, 0, ul, uz, zero.point, gen),
                   _wave_front(law, 2, uz, ur, x, t, wave.generation)]
        return [f for f in out if f is not None], "transmit"
    if b.kind == NONPHYSICAL or a.family != b.family:
        return None, ""
    if a.strength * b.strength >= eps:
        return None, ""
    ux = _curve_to_np_line(law, a.family, ul, ur, st.lam_np, ur[0])
    out = [_wave_front(law, a.family, ul, ux, x, t, gen), _np_front(st, ux, ur, x, t, gen)]
    return [f for f in out if f is not None], "merge"


# ---------------------------------------------------------------------------
# driver


def run(state: FTState, params: SolverParams | None = None) -> Trajectory:
    """Advance ``state`` to ``params.t_end``, recording snapshots and events.

    The state is modified in place, so a later call with a larger ``t_end``
    continues the same evolution.
    """
    prm = params or state.params
    t_end = prm.t_end
    if t_end < state.t:
        raise ValueError("t_end lies in the past of the state")
    snaps_due = sorted(t for t in set(prm.snapshot_times) if state.t <= t <= t_end)
    snapshots = []
    n_events = 0
    while True:
        e = _peek(state)
        tc = e[0] if e is not None else math.inf
        while snaps_due and snaps_due[0] < tc and snaps_due[0] <= t_end:
            snapshots.append(state.snapshot(snaps_due.pop(0)))
        if tc > t_end:
            break
        tc, group = next_event(state)
        resolve(state, tc, group)
        n_events += 1
        if n_events > prm.max_events:
            raise InstabilityError(f"event count exceeds the cap {prm.max_events}")
    while snaps_due:
        snapshots.append(state.snapshot(snaps_due.pop(0)))
    state.t = t_end
    final = state.snapshot(t_end)
    if not snapshots or snapshots[-1].t != t_end:
        snapshots.append(final)
    history = list(state.history)
    for f in state.fronts():
        h = _record(state, f, t_end)
        state.births[f.id] = h["t_birth"]
        history.append(h)
    stats = {
        "interactions": state.interactions,
        "events_this_run": n_events,
        "fronts": state.n_fronts,
        "wave_tv": float(state.wave_tv),
        "lambda_np": state.lam_np,
        "mass_drift": float(abs(mass_functional(final) - state.mass0) / state.mass_scale),
        "glimm_potential": glimm_potential(state),
    }
    return Trajectory(snapshots, list(state.events), history, t_end, state.left_state,
                      state.right_state, state.grid, state.law, stats)


def evolve(law, grid, u0, params, sample_dx=None) -> Trajectory:
    """``initialize`` followed by ``run``."""
    return run(initialize(law, grid, u0, params, sample_dx), params)


# ---------------------------------------------------------------------------
# weak formulation


@dataclass(frozen=True)
class BumpTestFunction:
    """Product bump ``B(t) B(x)`` with ``B(r) = (1 - r^2)^3`` on the support box.

    ``B`` is C2 with compact support, non-negative, and polynomial of degree
    six inside its support, so Gauss-Legendre quadrature along a straight
    front is exact.
    """

    t_lo: float
    t_hi: float
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if not (self.t_lo < self.t_hi and self.x_lo < self.x_hi):
            raise ValueError("empty test-function support")

    @staticmethod
    def _b(r):
        return np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 3, 0.0)

    def __call__(self, t, x):
        tc, tw = 0.5 * (self.t_lo + self.t_hi), 0.5 * (self.t_hi - self.t_lo)
        xc, xw = 0.5 * (self.x_lo + self.x_hi), 0.5 * (self.x_hi - self.x_lo)
        return self._b((np.asarray(t) - tc) / tw) * self._b((np.asarray(x) - xc) / xw)


@dataclass(frozen=True)
class WeakResidual:
    mass: float
    momentum: float
    entropy_production: float
    zero_wave_entropy: float


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _segment_integral(phi, h, values_fn):
    """``int phi(t, x(t)) dt`` over the part of the segment inside the support."""
    tb, td = max(h["t_birth"], phi.t_lo), min(h["t_death"], phi.t_hi)
    if td <= tb:
        return 0.0
    s, x0, t0 = h["speed"], h["x0"], h["t0"]
    cuts = [tb, td]
    if s != 0.0:
        for xe in (phi.x_lo, phi.x_hi):
            tc = t0 + (xe - x0) / s
            if tb < tc < td:
                cuts.append(tc)
    elif not phi.x_lo < x0 < phi.x_hi:
        return 0.0
    cuts.sort()
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        tt = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
        total += 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, phi(tt, x0 + s * (tt - t0))))
    return total * values_fn


def weak_solution_residual(traj: Trajectory, phi: BumpTestFunction) -> WeakResidual:
    """Residuals of the weak mass and momentum identities and the entropy production.

    For piecewise constant solutions the space-time integrals reduce to
    line integrals along fronts: ``int phi (s [rho] - [q]) dt`` for mass and
    ``int phi (s [q] - [P]) dt`` plus the point-source terms for momentum.
    ``entropy_production`` sums ``int phi (s [E] - [F]) dt`` over moving
    fronts and must be non-negative for admissible solutions; the
    corresponding term of the stationary jumps is reported separately.
    """
    if phi.t_lo < 0.0 or phi.t_hi > traj.t_end:
        raise DomainError(
            f"test-function time support [{phi.t_lo}, {phi.t_hi}] exceeds [0, {traj.t_end}]")
    law = traj.law
    ecache = {}

    def E(u):
        if u not in ecache:
            ecache[u] = (law.p(u[0]), u[1] * u[1] / (2.0 * u[0]) + law.internal_energy(u[0]))
        return ecache[u]

    mass = mom = ent = zent = 0.0
    for h in traj.history:
        ul, ur, s = h["ul"], h["ur"], h["speed"]
        if h["t_death"] <= phi.t_lo or h["t_birth"] >= phi.t_hi:
            continue
        pl, El = E(ul)
        pr, Er = E(ur)
        Pl = ul[1] * ul[1] / ul[0] + pl
        Pr = ur[1] * ur[1] / ur[0] + pr
        Fl = ul[1] / ul[0] * (El + pl)
        Fr = ur[1] / ur[0] * (Er + pr)
        if h["kind"] == ZERO:
            src = h["point"].jump(ur)
            mass += _segment_integral(phi, h, -(ur[1] - ul[1]))
            mom += _segment_integral(phi, h, -(Pr - Pl) + src)
            zent += _segment_integral(phi, h, -(Fr - Fl) + ur[1] / ur[0] * src)
            continue
        mass += _segment_integral(phi, h, s * (ur[0] - ul[0]) - (ur[1] - ul[1]))
        mom += _segment_integral(phi, h, s * (ur[1] - ul[1]) - (Pr - Pl))
        ent += _segment_integral(phi, h, s * (Er - El) - (Fr - Fl))
    return WeakResidual(float(abs(mass)), float(abs(mom)), float(ent), float(zent))


def check_consistency(state: FTState, tol: float = 0.0):
    """Raise ``AssertionError`` if the front list is unsorted or states do not chain."""
    prev = None
    u = state.left_state
    for f in state.fronts():
        if f.ul != u:
            raise AssertionError(f"state chain broken at {f!r}")
        if prev is not None and f.x(state.t) < prev.x(state.t) - COLLISION_GUARD * max(1.0, abs(f.x(state.t))):
            raise AssertionError(f"fronts out of order at {f!r}")
        if f.kind == ZERO and f.ul[1] != f.ur[1]:
            raise AssertionError(f"momentum jumps across zero wave {f!r}")
        prev, u = f, f.ur
    if u != state.right_state:
        raise AssertionError("right far-field state does not match")
