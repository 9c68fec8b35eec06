"""Command-line driver: ``curvedpipe {run,converge,validate,stationary} CONFIG``.

Exit codes: 0 success, 1 solver domain error, 2 configuration error,
3 instability guard.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    Scenario,
    build_all,
    build_initial,
    build_params,
    config_hash,
    finite_or_none,
    load_scenario,
)
from .errors import ConfigError, CurvedPipeError, InstabilityError, SolverDomainError
from .fronttrack import (
    BumpTestFunction,
    Piecewise,
    Snapshot,
    initialize,
    l1_distance,
    mass_functional,
    run,
    weak_solution_residual,
)
from .refsolver import FVGrid, fv_run
from .riemann import ZERO
from .stationary import build as build_stationary

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG, EXIT_INSTABILITY = 0, 1, 2, 3


def _fmt(x) -> str:
    return format(float(x), ".17g")


class _Out:
    def __init__(self, root: Path, quiet: bool):
        # created on first write, so validate leaves no trace
        self.root = root
        self.quiet = quiet

    def say(self, msg):
        if not self.quiet:
            print(msg)

    def json(self, name, obj):
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def csv(self, name, header, rows):
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])


# ---------------------------------------------------------------------------
# artifact writers


def snapshot_rows(law, snap: Snapshot, window):
    """Rows ``x, rho, q, v, P``: each row's state holds from ``x`` to the next row."""
    lo, hi = window
    i0 = int(np.searchsorted(snap.xs, lo, side="right"))
    rows = [(lo, snap.rho[i0], snap.q[i0])]
    for k, x in enumerate(snap.xs):
        if lo < x < hi:
            rows.append((x, snap.rho[k + 1], snap.q[k + 1]))
    out = []
    for x, r, q in rows:
        out.append((x, r, q, q / r, q * q / r + law.p(r)))
    return out


def _write_snapshots(out: _Out, law, snaps, window, prefix):
    for s in snaps:
        out.csv(f"{prefix}/t_{s.t:.6f}.csv", ["x", "rho", "q", "v", "P"], snapshot_rows(law, s, window))


def _manifest(out: _Out, scn: Scenario, raw: dict, command: str, level: int):
    import pydantic
    import scipy

    out.json("manifest.json", {
        "command": command,
        "config_hash": config_hash(raw),
        "scenario": scn.name,
        "level": level,
        "versions": {"curvedpipe": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "pydantic": pydantic.__version__},
        "tolerances": scn.params.model_dump(mode="json"),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    })


def _gnuplot(out: _Out, snaps, prefix):
    lines = ["set xlabel 'x'", "set ylabel 'rho'", "set datafile separator ','",
             "set key outside"]
    plots = [f"'{prefix}/t_{s.t:.6f}.csv' using 1:2 with steps title 't={s.t:g}'" for s in snaps]
    lines.append("plot " + ", \\\n     ".join(plots))
    (out.root / "plot.gp").write_text("\n".join(lines) + "\n")


def _junction_residual(state, coeffs):
    """Max junction residual over zero waves at kink points of the current state."""
    worst = 0.0
    for f in state.fronts():
        if f.kind == ZERO and f.point.kind == "kink":
            up, um = f.ur, f.ul
            Pp = up.q * up.q / up.rho + state.law.p(up.rho)
            Pm = um.q * um.q / um.rho + state.law.p(um.rho)
            worst = max(worst, abs(up.q - um.q), abs(Pp - Pm - f.point.jump(up)))
    return worst


def _as_piecewise(datum, sample):
    if isinstance(datum, Piecewise):
        return datum
    a, b, dx = sample
    return Piecewise.from_function(datum, a, b, dx)


# ---------------------------------------------------------------------------
# verbs


def cmd_run(scn: Scenario, raw, out: _Out, level: int):
    law, geom, coeffs, grid = build_all(scn, level)
    prm = build_params(scn.params)
    window = scn.params.window
    base = out.root
    datum, sample = build_initial(scn, law, grid, base_dir=base)
    summary = {"scenario": scn.name, "solver": scn.solver, "level": level,
               "source_points": len(grid.points)}
    metrics = {}
    ft_final = None
    if scn.solver in ("fronttrack", "both"):
        times = sorted(set(prm.snapshot_times) | {0.0, prm.t_end})
        prm_run = build_params(scn.params.model_copy(update={"snapshot_times": times}))
        state = initialize(law, grid, datum, prm_run, sample)
        metrics["junction_residual"] = _junction_residual(state, coeffs)
        traj = run(state, prm_run)
        ft_final = traj.snapshots[-1]
        _write_snapshots(out, law, traj.snapshots, window, "snapshots")
        out.csv("events.csv", ["t", "x", "kind", "incoming_strength", "outgoing_strength",
                               "n_in", "n_out"],
                [(e[0], e[1], e[2], e[3], e[4], e[5], e[6]) for e in traj.events])
        out.json("wave_diagram.json", [
            {"id": w["id"], "kind": w["kind"], "family": w["family"],
             "points": [[float(a), float(b)] for a, b in w["points"]]}
            for w in traj.wave_diagram()])
        T = prm.t_end
        phi = BumpTestFunction(0.1 * T, 0.9 * T, window[0], window[1])
        wr = weak_solution_residual(traj, phi)
        metrics.update({
            "tv_series": [[s.t, s.total_variation()] for s in traj.snapshots],
            "mass_series": [[s.t, mass_functional(s)] for s in traj.snapshots],
            "mass_drift": traj.stats["mass_drift"],
            "weak_residual": {"mass": wr.mass, "momentum": wr.momentum,
                              "entropy_production": wr.entropy_production,
                              "zero_wave_entropy": wr.zero_wave_entropy},
            "junction_defect_final": _junction_residual(state, coeffs),
        })
        summary["fronttrack"] = {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                                 for k, v in traj.stats.items()}
        if scn.lipschitz.pairs:
            metrics["lipschitz"] = _lipschitz(scn, law, grid, datum, sample, prm, ft_final)
        if scn.gnuplot:
            _gnuplot(out, traj.snapshots, "snapshots")
    if scn.solver in ("fv", "both"):
        lo, hi = scn.params.fv_domain
        fvg = FVGrid(lo, hi, scn.params.fv_cells, scn.params.cfl)
        fsnaps = fv_run(law, geom, coeffs, datum if sample is None else _as_piecewise(datum, sample),
                        prm.t_end, fvg, snapshot_times=prm.snapshot_times)
        _write_snapshots(out, law, fsnaps, (lo, hi), "snapshots_fv")
        if ft_final is not None:
            metrics["ft_fv_l1"] = l1_distance(ft_final, fsnaps[-1],
                                              window=(max(lo, window[0]), min(hi, window[1])))
    out.json("metrics.json", metrics)
    summary["status"] = "ok"
    out.json("summary.json", summary)
    out.say(f"{scn.name}: ok ({out.root})")
    return EXIT_OK


def _lipschitz(scn, law, grid, datum, sample, prm, final):
    rng = np.random.default_rng(scn.seed)
    base = _as_piecewise(datum, sample) if sample is not None else datum
    lo, hi = scn.params.window
    ratios = []
    for _ in range(scn.lipschitz.pairs):
        a = float(rng.uniform(lo, 0.5 * (lo + hi) - 0.5))
        drho, dq = (scn.lipschitz.amplitude * float(x) for x in rng.uniform(-1.0, 1.0, 2))
        pert = base.add_box(a, a + 0.5, drho, dq)
        d0 = l1_distance(Snapshot(0.0, np.array(base.breaks), *_arrays(base)),
                         Snapshot(0.0, np.array(pert.breaks), *_arrays(pert)))
        tr = run(initialize(law, grid, pert, prm), prm)
        ratios.append(l1_distance(tr.snapshots[-1], final) / d0)
    return {"ratios": ratios, "L_meas": max(ratios)}


def _arrays(p: Piecewise):
    return np.array([u[0] for u in p.states]), np.array([u[1] for u in p.states])


def cmd_converge(scn: Scenario, raw, out: _Out, level: int):
    conv = scn.convergence
    window = scn.params.window
    finals = []
    eps_list = conv.eps or [scn.params.eps_rarefaction] * len(conv.levels)
    if len(eps_list) != len(conv.levels):
        raise ConfigError("needs one entry per level", "convergence.eps")
    for n, eps in zip(conv.levels, eps_list):
        law, geom, coeffs, grid = build_all(scn, n)
        prm = build_params(scn.params.model_copy(update={
            "eps_rarefaction": eps, "eps_nonphysical": min(scn.params.eps_nonphysical, 0.1 * eps)}))
        datum, sample = build_initial(scn, law, grid, base_dir=out.root)
        finals.append(run(initialize(law, grid, datum, prm, sample), prm).snapshots[-1])
    rows = []
    dists = [l1_distance(a, b, window=window) for a, b in zip(finals, finals[1:])]
    for i, d in enumerate(dists):
        ratio = dists[i - 1] / d if i > 0 and d > 0 else float("nan")
        rows.append((conv.levels[i], conv.levels[i + 1], eps_list[i], d, ratio))
    out.csv("convergence.csv", ["level", "next_level", "eps_rarefaction", "l1", "ratio"], rows)
    summary = {"scenario": scn.name, "levels": conv.levels, "l1": dists,
               "ratios": [finite_or_none(r[4]) for r in rows]}
    if conv.fv_cells:
        law, geom, coeffs, grid = build_all(scn, conv.levels[-1])
        lo, hi = scn.params.fv_domain
        fv_rows = []
        for i, cells in enumerate(conv.fv_cells):
            eps = scn.params.eps_rarefaction / 2 ** i
            prm = build_params(scn.params.model_copy(update={
                "eps_rarefaction": eps, "eps_nonphysical": min(scn.params.eps_nonphysical, 0.1 * eps)}))
            datum, sample = build_initial(scn, law, grid, base_dir=out.root)
            ft = run(initialize(law, grid, datum, prm, sample), prm).snapshots[-1]
            fv = fv_run(law, geom, coeffs, _as_piecewise(datum, sample) if sample else datum,
                        prm.t_end, FVGrid(lo, hi, cells, scn.params.cfl))[-1]
            fv_rows.append((eps, cells, l1_distance(ft, fv, window=(max(lo, window[0]), min(hi, window[1])))))
        out.csv("ft_vs_fv.csv", ["eps_rarefaction", "fv_cells", "l1"], fv_rows)
        summary["ft_vs_fv"] = [r[2] for r in fv_rows]
        if conv.bound is not None:
            summary["within_bound"] = fv_rows[-1][2] <= conv.bound
    out.json("summary.json", summary)
    out.say(f"{scn.name}: " + ", ".join(f"{d:.3e}" for d in dists))
    return EXIT_OK


def cmd_validate(scn: Scenario, raw, out: _Out, level: int):
    law, geom, coeffs, grid = build_all(scn, level)
    build_initial(scn, law, grid, base_dir=out.root)
    out.say(f"{scn.name}: valid ({len(grid.points)} source points at level {level})")
    return EXIT_OK


def cmd_stationary(scn: Scenario, raw, out: _Out, level: int):
    if scn.initial.kind != "stationary":
        raise ConfigError("the stationary verb needs a stationary initial datum", "initial.kind")
    law, geom, coeffs, grid = build_all(scn, level)
    prof = build_stationary(law, geom, coeffs, scn.initial.q, scn.initial.rho_left)
    prof.to_csv(out.root / "stationary.csv")
    grid.to_csv(out.root / "grid.csv")
    from .discretize import discrete_stationary

    xs, states = discrete_stationary(law, grid, scn.initial.q, scn.initial.rho_left)
    snap = Snapshot(0.0, xs, np.array([u.rho for u in states]), np.array([u.q for u in states]))
    lo = min(scn.params.window[0], geom.x_start - 1.0)
    hi = max(scn.params.window[1], geom.x_end + 1.0)
    out.csv("discrete_stationary.csv", ["x", "rho", "q", "v", "P"], snapshot_rows(law, snap, (lo, hi)))
    out.json("summary.json", {
        "scenario": scn.name, "q": scn.initial.q, "rho_left": prof.rho_left,
        "rho_right": prof.rho_right, "kink_jump_residuals": prof.jump_residuals(),
        "ode_residual": prof.ode_residual(), "min_margin": prof.min_margin(),
        "discrete_rho_right": float(states[-1].rho),
    })
    out.say(f"{scn.name}: stationary profile written to {out.root}")
    return EXIT_OK


VERBS = {"run": cmd_run, "converge": cmd_converge, "validate": cmd_validate,
         "stationary": cmd_stationary}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvedpipe", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)
    for name in VERBS:
        p = sub.add_parser(name)
        p.add_argument("config", help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory (default: out/<name>)")
        p.add_argument("--level", type=int, default=None, help="override params.level")
        p.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn, raw = load_scenario(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    level = scn.params.level if args.level is None else args.level
    root = Path(args.out or scn.params.output_dir or Path("out") / scn.name)
    out = _Out(root, args.quiet)
    if scn.initial.kind == "file":
        # relative datum paths resolve against the config file
        scn = scn.model_copy(update={"initial": scn.initial.model_copy(update={
            "path": str((Path(args.config).parent / scn.initial.path)
                        if not Path(scn.initial.path).is_absolute() else scn.initial.path)})})
    try:
        if args.verb != "validate":
            _manifest(out, scn, raw, args.verb, level)
        return VERBS[args.verb](scn, raw, out, level)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        out.json("diagnostics.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except SolverDomainError as exc:
        out.json("diagnostics.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"solver domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CurvedPipeError as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
