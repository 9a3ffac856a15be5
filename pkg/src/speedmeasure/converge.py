"""Convergence experiments: speed-measure sense, forward (laws), converse (estimates).

Weak convergence of path laws is checked through the distributions of a
fixed family of path functionals (see :func:`speedmeasure.paths.law_distances`),
which is weaker than weak convergence on path space; reports say so in
their notes.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .estimate import InteriorEstimate, estimate_boundary_atom, estimate_interior
from .measures import (
    DensityPiece,
    Interval,
    SpeedMeasure,
    boundary_family,
    integrate,
    interior_family,
    vague_distance,
)
from .paths import law_distances, reference_window
from .simulate import ChainSimulator, PathEnsemble, build_grid_chain, path_seed, run_chain, run_timechange

__all__ = [
    "ConvergenceReport",
    "SimConfig",
    "EstimatorConfig",
    "speed_sense_check",
    "stone_forward",
    "converse_experiment",
    "equivalence_audit",
    "families_for",
    "TOLERANCES",
]

# decision thresholds in one place
TOLERANCES = {
    "speed_sense": 0.05,
    "converse": 0.1,
    "stone_noise_factor": 2.0,
    "monotone_window": 3,
}

WEAK_CONVERGENCE_NOTE = (
    "path-law convergence is tested through the laws of X at T/4, T/2, T, the running maximum "
    "and an exit time; this is weaker than weak convergence on path space"
)


@dataclass
class ConvergenceReport:
    mode: str
    per_index: list
    verdict: bool
    tolerances: dict
    seeds: dict = field(default_factory=dict)
    runtime: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def distances(self) -> list[float]:
        return [row["distance"] for row in self.per_index]

    @property
    def ns(self) -> list:
        return [row["n"] for row in self.per_index]

    def to_dict(self, include_runtime: bool = False) -> dict:
        d = {
            "mode": self.mode,
            "per_index": self.per_index,
            "verdict": bool(self.verdict),
            "tolerances": self.tolerances,
            "seeds": self.seeds,
            "notes": self.notes,
        }
        if include_runtime:
            d["runtime"] = self.runtime
        return d

    def curves(self) -> list[tuple]:
        """Rows ``(n, distance, family)`` for plotting."""
        rows = []
        for row in self.per_index:
            for fam, dist in row.get("details", {}).get("families", {}).items():
                rows.append((row["n"], dist, fam))
        return rows


def _nonincreasing_tail(d: list[float], k: int, slack: float = 0.0) -> bool:
    tail = d[-k:]
    return all(b <= a + slack for a, b in zip(tail[:-1], tail[1:]))


def _sorted_pairs(seq, indices):
    ms = list(seq)
    ns = list(indices) if indices is not None else list(range(1, len(ms) + 1))
    if len(ns) != len(ms):
        raise ValueError("indices and measures differ in length")
    order = np.argsort(ns, kind="stable")
    return [ns[i] for i in order], [ms[i] for i in order]


def families_for(J: Interval, K: int = 64, K_b: int = 8) -> dict:
    """Interior family plus boundary families at the closed endpoints of J."""
    fams = {"interior": interior_family(J, K)}
    if J.left_closed:
        fams["left"] = boundary_family(J, "left", K_b)
    if J.right_closed:
        fams["right"] = boundary_family(J, "right", K_b)
    return fams


def speed_sense_check(seq, m0: SpeedMeasure, tol: float = TOLERANCES["speed_sense"], indices=None,
                      K: int = 64, K_b: int = 8) -> ConvergenceReport:
    """Distances of ``m^n`` to ``m0`` over the interior and boundary test families.

    Verdict: the largest family distance at the last index is below ``tol``
    and the distance sequence does not increase over the last three indices.
    """
    t0 = time.perf_counter()
    ns, ms = _sorted_pairs(seq, indices)
    for m in ms:
        if m.interval != m0.interval:
            raise ValueError(f"measure on {m.interval} does not match the limit's {m0.interval}")
    fams = families_for(m0.interval, K, K_b)
    rows = []
    for n, m in zip(ns, ms):
        per_fam = {name: float(vague_distance(m, m0, fam)) for name, fam in fams.items()}
        rows.append({"n": n, "distance": max(per_fam.values()), "details": {"families": per_fam}})
    d = [r["distance"] for r in rows]
    k = TOLERANCES["monotone_window"]
    verdict = bool(d) and d[-1] < tol and _nonincreasing_tail(d, k, 1e-12)
    return ConvergenceReport(
        "speed_sense", rows, verdict,
        {"tol": tol, "K": K, "K_boundary": K_b, "monotone_window": k},
        {}, time.perf_counter() - t0,
        {"families": list(fams)},
    )


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings for the forward experiment."""

    engine: str = "chain"
    h: float = 0.01
    dt: float = 1e-5
    bin: float = 0.01
    n_paths: int = 10_000
    horizon: float = 1.0
    window: tuple | None = None
    seed: int = 0
    threads: int = 1
    # 257 points put T/4, T/2 and T exactly on the output grid
    n_out: int = 257
    moving_start: bool = True
    backend: str | None = None


def _simulate(m: SpeedMeasure, x0: float, cfg: SimConfig, seed: int, nodes) -> PathEnsemble:
    if cfg.engine == "chain":
        chain = build_grid_chain(m, nodes=nodes, check=False)
        return run_chain(chain, x0, cfg.horizon, cfg.n_paths, seed, n_out=cfg.n_out,
                         threads=cfg.threads, backend=cfg.backend)
    if cfg.engine == "timechange":
        return run_timechange(m, x0, cfg.horizon, cfg.n_paths, cfg.dt, cfg.bin, seed, n_out=cfg.n_out,
                              window=cfg.window, threads=cfg.threads, backend=cfg.backend)
    raise ValueError(f"unknown engine {cfg.engine!r}")


def _shared_nodes(ms, m0, cfg: SimConfig, levels, optional=()) -> np.ndarray | None:
    """Common node set: the grid of ``m0``, every atom and ``levels``; each of
    ``optional`` is added only when it is at least ``h/4`` from all other nodes
    (closer starts snap to their nearest node, avoiding near-duplicate nodes
    whose tiny holding times make the chain crawl)."""
    if cfg.engine != "chain":
        return None
    J = m0.interval
    lo, hi = cfg.window if cfg.window is not None else (J.left, J.right)
    base = build_grid_chain(m0, cfg.h, window=(lo, hi), check=False).nodes
    extra = set(levels)
    for m in list(ms) + [m0]:
        extra.update(a.at for a in m.atoms)
    pts = np.unique(np.concatenate((base, [x for x in extra if lo < x < hi])))
    for x in optional:
        if lo < x < hi and np.min(np.abs(pts - x)) >= 0.25 * cfg.h:
            pts = np.unique(np.append(pts, x))
    return pts


def stone_forward(seq, m0: SpeedMeasure, x0: float, config: SimConfig | None = None, indices=None,
                  speed_tol: float = TOLERANCES["speed_sense"]) -> ConvergenceReport:
    """Law distances between ensembles of ``m^n`` and of ``m0`` started at ``x0``.

    All ensembles share the master seed (common random numbers) and, for the
    chain engine, one node set.  The noise floor is the law distance between
    two independent ``m0`` ensembles; the verdict requires the last distance
    to be below ``stone_noise_factor`` times that floor, with no increase
    beyond the floor over the last three indices.  With ``moving_start`` the
    same is required for starts ``x0 + 0.1/n``.
    """
    t0 = time.perf_counter()
    cfg = config or SimConfig()
    ns, ms = _sorted_pairs(seq, indices)
    J = m0.interval
    window = reference_window(J if cfg.window is None else Interval(cfg.window[0], cfg.window[1]), x0)
    moving = {n: x0 + 0.1 / n for n in ns} if cfg.moving_start else {}
    for n, x in moving.items():
        if not J.in_interior(x):
            raise ValueError(f"moving start {x} for n={n} leaves the interior")
    nodes = _shared_nodes(ms, m0, cfg, [x0], moving.values())
    baseline_seed = path_seed(cfg.seed, 1 << 20)
    ens0 = _simulate(m0, x0, cfg, cfg.seed, nodes)
    ens0b = _simulate(m0, x0, cfg, baseline_seed, nodes)
    base = law_distances(ens0, ens0b, window=window)
    floor = max(base.values())
    threshold = TOLERANCES["stone_noise_factor"] * floor
    rows = []
    for n, m in zip(ns, ms):
        ens = _simulate(m, x0, cfg, cfg.seed, nodes)
        dd = law_distances(ens, ens0, window=window)
        row = {"n": n, "distance": max(dd.values()), "details": {"functionals": dd}}
        if cfg.moving_start:
            ens_mv = _simulate(m, moving[n], cfg, cfg.seed, nodes)
            dm = law_distances(ens_mv, ens0, window=window)
            row["details"]["moving_start"] = {"x0": moving[n], "x0_used": ens_mv.params.get("x0_snapped", moving[n]),
                                              "distance": max(dm.values()), "functionals": dm}
        rows.append(row)
    k = TOLERANCES["monotone_window"]

    def ok(d):
        return bool(d) and d[-1] < threshold and _nonincreasing_tail(d, k, floor)

    d = [r["distance"] for r in rows]
    verdict_fixed = ok(d)
    verdict_moving = ok([r["details"]["moving_start"]["distance"] for r in rows]) if cfg.moving_start else None
    verdict = verdict_fixed and (verdict_moving is not False)
    hyp = speed_sense_check(ms, m0, speed_tol, ns)
    notes = {
        "law_distance": WEAK_CONVERGENCE_NOTE,
        "baseline_functionals": base,
        "reference_window": list(window),
        "verdict_fixed_start": verdict_fixed,
        "verdict_moving_start": verdict_moving,
        "hypothesis_speed_sense": hyp.verdict,
        "engine": cfg.engine,
        "n_paths": cfg.n_paths,
        "horizon": cfg.horizon,
    }
    if not hyp.verdict:
        notes["hypothesis_failure"] = "sequence does not converge in the speed-measure sense"
    tols = {"noise_floor": floor, "threshold": threshold, "noise_factor": TOLERANCES["stone_noise_factor"],
            "monotone_window": k}
    return ConvergenceReport("stone_forward", rows, verdict, tols,
                             {"common": int(cfg.seed), "baseline": int(baseline_seed)},
                             time.perf_counter() - t0, notes)


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings for the converse experiment.

    ``grid`` is the estimation grid (strictly inside J); ``boundary`` maps a
    closed side to the level ``b`` used for its boundary-weight estimate.
    """

    grid: tuple
    h: float = 0.01
    n_per_node: int = 10_000
    seed: int = 0
    threads: int = 1
    window: tuple | None = None
    boundary: dict = field(default_factory=dict)
    n_boundary: int = 20_000
    noise_adjust: bool = True
    backend: str | None = None


def _estimate(m: SpeedMeasure, cfg: EstimatorConfig) -> tuple[SpeedMeasure, InteriorEstimate, dict]:
    sim = ChainSimulator(m, cfg.h, window=cfg.window, backend=cfg.backend, extra_nodes=cfg.grid)
    est = estimate_interior(sim, cfg.grid, cfg.n_per_node, cfg.seed, cfg.threads)
    e = est.cell_edges
    dens = np.maximum(est.density, 0.0)
    lo, hi = float(e[0]), float(e[-1])
    pieces = [DensityPiece(e[i], e[i + 1], (float(d),)) for i, d in enumerate(dens)]
    J = m.interval
    weights = {"left": 0.0, "right": 0.0}
    atoms_info = {}
    for side, b in cfg.boundary.items():
        ba = estimate_boundary_atom(sim, side, b, cfg.n_boundary, path_seed(cfg.seed, 1 << 21), est, cfg.threads)
        weights[side] = ba.weight
        atoms_info[side] = {"weight": ba.weight, "se": ba.se}
        if side == "left":
            pieces.insert(0, DensityPiece(J.left, lo, (float(dens[0]),)))
            lo = J.left
        else:
            pieces.append(DensityPiece(hi, J.right, (float(dens[-1]),)))
            hi = J.right
    mhat = SpeedMeasure(Interval.closed(lo, hi), tuple(pieces), (), weights["left"], weights["right"])
    return mhat, est, atoms_info


def _noise_level(est: InteriorEstimate, mhat: SpeedMeasure, fams: dict) -> float:
    """Largest normalised standard error of ``∫ f dm̂`` over the families."""
    worst = 0.0
    e = est.cell_edges
    for fam in fams.values():
        for f in fam:
            var = 0.0
            for i in range(est.cell_mass.size):
                cell = Interval.closed(float(e[i]), float(e[i + 1]))
                unit = SpeedMeasure(cell, (DensityPiece(cell.left, cell.right, (1.0 / (cell.right - cell.left),)),))
                fi = integrate(unit, f)
                var += (fi * est.cell_mass_se[i]) ** 2
            worst = max(worst, math.sqrt(var) / (1.0 + f.sup_norm()))
    return worst


def converse_experiment(seq, m0: SpeedMeasure, config: EstimatorConfig, tol: float = TOLERANCES["converse"],
                        indices=None) -> ConvergenceReport:
    """Estimate every ``m^n`` and ``m0`` from simulated exit times, then compare the estimates.

    The estimates share seeds and the grid.  With ``noise_adjust`` the
    tolerance is raised by three times the largest standard error of a test
    integral of the limit estimate.
    """
    t0 = time.perf_counter()
    ns, ms = _sorted_pairs(seq, indices)
    mhat0, est0, b0 = _estimate(m0, config)
    fams = families_for(mhat0.interval)
    noise = 3.0 * _noise_level(est0, mhat0, fams) if config.noise_adjust else 0.0
    tol_eff = tol + noise
    estimates = []
    extra = []
    for m in ms:
        mh, est, binfo = _estimate(m, config)
        estimates.append(mh)
        extra.append({"boundary": binfo, "cell_mass": est.cell_mass.tolist()})
    inner = speed_sense_check(estimates, mhat0, tol_eff, ns)
    for row, ex in zip(inner.per_index, extra):
        row["details"].update(ex)
    notes = {
        "estimator": "one-point Green collocation on the grid, chain engine",
        "grid": list(map(float, config.grid)),
        "limit_estimate": {"boundary": b0, "cell_mass": est0.cell_mass.tolist()},
        "start_points": "one per grid node",
    }
    return ConvergenceReport(
        "converse", inner.per_index, inner.verdict,
        {"tol": tol, "noise": noise, "tol_effective": tol_eff, **{k: v for k, v in inner.tolerances.items() if k != "tol"}},
        {"common": int(config.seed)}, time.perf_counter() - t0, notes,
    )


def equivalence_audit(sequences, config: SimConfig | None = None, speed_tol: float = TOLERANCES["speed_sense"]) -> list[dict]:
    """Run both checks on every fixture sequence and record whether their verdicts agree."""
    out = []
    for s in sequences:
        cfg = replace(config or SimConfig(), window=s.window if s.window is not None else (config.window if config else None))
        sp = speed_sense_check(s.measures, s.limit, speed_tol, s.ns)
        st = stone_forward(s.measures, s.limit, s.x0, cfg, s.ns, speed_tol)
        out.append({
            "sequence": s.name,
            "speed_sense": sp.verdict,
            "stone_forward": st.verdict,
            "agree": sp.verdict == st.verdict,
            "expected": s.converges,
            "speed_distances": sp.distances,
            "stone_distances": st.distances,
            "stone_threshold": st.tolerances["threshold"],
        })
    return out
