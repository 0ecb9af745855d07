"""Monte Carlo driver: sample tangent vectors, trace them, aggregate rates.

Each trajectory gets its own child of ``numpy.random.SeedSequence(seed)``, and
results are reduced in trajectory order, so reports are identical whatever
the number of worker processes.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .collar import max_collar_width
from .constants import SAMPLE_Y_MAX, SAMPLE_Y_MIN
from .errors import DegenerateHit, EmptySample, ReductionStall
from .flow import EventKind, FlowState, excursions, trace
from .hypcore import PointH, TangentVector, line_from_vector
from .surface import ArcTable, SurfaceSpec, build_arc_table, preset, target_from_word

SIDES = ("A", "B")


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "punctured-torus"
    word: str = "A"
    sides: str = "both"  # "A", "B" or "both"
    r_frac: float = 0.4
    r0_frac: float = 0.8
    time: float = 2.0e4
    n_traj: int = 64
    seed: int = 0
    depth_grid: int = 20
    workers: Optional[int] = None

    def __post_init__(self):
        if self.sides not in ("A", "B", "both"):
            raise ValueError(f"sides must be A, B or both, got {self.sides!r}")
        for name in ("r_frac", "r0_frac"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
        if not self.time > 0.0:
            raise ValueError("time must be positive")
        if self.n_traj < 1:
            raise ValueError("need at least one trajectory")
        if self.depth_grid < 1:
            raise ValueError("depth grid needs at least one point")

    @property
    def counted_sides(self) -> Tuple[str, ...]:
        return SIDES if self.sides == "both" else (self.sides,)


# --------------------------------------------------------------------------
# sampling


def sample_points(spec: SurfaceSpec, rng: np.random.Generator, n: int, batch: int = 65536) -> np.ndarray:
    """``n`` base points uniform for hyperbolic area on the polygon cut to
    SAMPLE_Y_MIN <= im <= SAMPLE_Y_MAX, as an (n, 2) array.

    Area-uniform means uniform in (re, 1/im), so proposals are drawn there
    and kept when inside the polygon.
    """
    x_lo, x_hi = spec.x_extent()
    u_lo, u_hi = 1.0 / SAMPLE_Y_MAX, 1.0 / SAMPLE_Y_MIN
    out = []
    have = 0
    while have < n:
        re = rng.uniform(x_lo, x_hi, batch)
        im = 1.0 / rng.uniform(u_lo, u_hi, batch)
        keep = spec.contains_array(re, im)
        pts = np.column_stack((re[keep], im[keep]))
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]


def sample_initial(spec: SurfaceSpec, rng: np.random.Generator) -> TangentVector:
    re, im = sample_points(spec, rng, 1)[0]
    return TangentVector(PointH(float(re), float(im)), float(rng.uniform(0.0, 2.0 * math.pi)))


def initial_state(v: TangentVector) -> FlowState:
    tl = line_from_vector(v)
    return FlowState(tl.line.x, tl.line.y, tl.t)


# --------------------------------------------------------------------------
# one trajectory


@dataclass
class TrajectorySummary:
    index: int
    resamples: int
    core_into: Dict[str, int]
    entries: Dict[str, int]
    returns: Dict[str, int]  # entries classed as near/far returns
    crossing_entries: Dict[str, int]
    excursion_lengths: Dict[str, List[float]]
    gaps: List[float]
    depths: List[float]


class _Setup:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.spec = preset(config.preset)
        target = target_from_word(self.spec, config.word, "A")
        self.length = target.length
        self.rmax = max_collar_width(target.length)
        self.r = config.r_frac * self.rmax
        self.r0 = config.r0_frac * self.rmax
        self.tables: List[ArcTable] = [
            build_arc_table(self.spec, target, self.r),
            build_arc_table(self.spec, target, self.r0),
        ]


_WORKER: Optional[_Setup] = None


def _init_worker(config: ExperimentConfig) -> None:
    global _WORKER
    _WORKER = _Setup(config)


def _summarize(index: int, resamples: int, log, T: float) -> TrajectorySummary:
    core_into = {s: 0 for s in SIDES}
    entries = {s: 0 for s in SIDES}
    returns = {s: 0 for s in SIDES}
    crossing = {s: 0 for s in SIDES}
    core_times = []
    for e in log.events:
        if e.target != 0:
            continue
        if e.kind == EventKind.CORE.value:
            core_into["B" if e.side == "A" else "A"] += 1
            core_times.append(e.time)
        elif e.kind == EventKind.ENTER.value:
            entries[e.side] += 1
            if e.cls == "R3":
                crossing[e.side] += 1
            else:
                returns[e.side] += 1
    lengths = {s: [] for s in SIDES}
    for rec in excursions(log, 0):
        lengths[rec.enter_side].append(rec.t_out - rec.t_in)
    depths = [rec.depth for rec in excursions(log, 1) if rec.enter_side == "A"]
    gaps = np.diff(core_times).tolist() if len(core_times) > 1 else []
    return TrajectorySummary(index, resamples, core_into, entries, returns, crossing, lengths, gaps, depths)


def run_trajectory(index: int, setup: Optional[_Setup] = None) -> TrajectorySummary:
    setup = setup or _WORKER
    cfg = setup.config
    child = np.random.SeedSequence(cfg.seed).spawn(cfg.n_traj)[index]
    rng = np.random.default_rng(child)
    resamples = 0
    while True:
        v = sample_initial(setup.spec, rng)
        try:
            log, _ = trace(setup.spec, setup.tables, initial_state(v), cfg.time)
        except (DegenerateHit, ReductionStall):
            resamples += 1
            if resamples > 100:
                raise
            continue
        return _summarize(index, resamples, log, cfg.time)


# --------------------------------------------------------------------------
# aggregation


def depth_distribution(depths: Sequence[float], r0: float, grid: Sequence[float]) -> List[Tuple[float, float, float]]:
    """(r_j, empirical CDF, cosh r_j / cosh r0) at each grid point."""
    if len(depths) == 0:
        raise EmptySample("no excursion depths to build a distribution from")
    d = np.sort(np.asarray(depths, dtype=float))
    n = len(d)
    out = []
    for rj in grid:
        emp = np.searchsorted(d, rj, side="right") / n
        out.append((float(rj), float(emp), math.cosh(rj) / math.cosh(r0)))
    return out


def theory(length: float, area: float, r: float, r0: float) -> Dict[str, float]:
    """Limits predicted for one two-sided target of the given length."""
    return {
        "crossing_rate_total": 2.0 * length / (math.pi * area),
        "crossing_rate_per_side": length / (math.pi * area),
        "entry_rate": length * math.cosh(r) / (math.pi * area),
        "return_rate": length * (math.cosh(r) - 1.0) / (math.pi * area),
        "excursion_length": 2.0 * math.pi * math.tanh(r),
        "mean_chord_length": math.pi * math.tanh(r),
        "gap_length": math.pi * area / (2.0 * length),
        "depth_cdf_at_zero": 1.0 / math.cosh(r0),
    }


def _mean_se(values: Sequence[float]) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if len(arr) < 2:
        return float(arr.mean()) if len(arr) else math.nan, math.nan
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(len(arr)))


TOLERANCES = {
    "crossing_rate_total": 0.03,
    "entry_rate": 0.03,
    "return_rate": 0.05,
    "excursion_length": 0.03,
    "gap_length": 0.03,
    "depth_sup": 0.02,
}


def aggregate(config: ExperimentConfig, setup: _Setup, results: Sequence[TrajectorySummary]) -> dict:
    T = config.time
    n = len(results)
    th = theory(setup.length, setup.spec.area, setup.r, setup.r0)
    sides = config.counted_sides

    def rate(per_traj):
        return _mean_se([v / T for v in per_traj])

    report: dict = {
        "config": {k: v for k, v in asdict(config).items() if k != "workers"},
        "geometry": {
            "length": setup.length,
            "max_width": setup.rmax,
            "r": setup.r,
            "r0": setup.r0,
            "area": setup.spec.area,
            "lifts": len(setup.tables[0].lifts),
        },
        "theory": th,
        "resampled": sum(res.resamples for res in results),
        "resampled_trajectories": [res.index for res in results if res.resamples],
    }
    emp: dict = {}
    total_core = [sum(res.core_into.values()) for res in results]
    emp["crossing_rate_total"] = rate(total_core)
    for s in sides:
        emp[f"crossing_rate_into_{s}"] = rate([res.core_into[s] for res in results])
        emp[f"entry_rate_{s}"] = rate([res.entries[s] for res in results])
        emp[f"return_rate_{s}"] = rate([res.returns[s] for res in results])
        emp[f"crossing_entry_rate_{s}"] = rate([res.crossing_entries[s] for res in results])
    pooled_lengths = [x for res in results for s in sides for x in res.excursion_lengths[s]]
    per_traj_len = [np.mean([x for s in sides for x in res.excursion_lengths[s]] or [math.nan]) for res in results]
    emp["excursion_length"] = (float(np.mean(pooled_lengths)) if pooled_lengths else math.nan, _mean_se(per_traj_len)[1])
    emp["excursion_count"] = len(pooled_lengths)
    gaps = [g for res in results for g in res.gaps]
    emp["gap_length"] = (float(np.mean(gaps)) if gaps else math.nan, _mean_se([np.mean(res.gaps or [math.nan]) for res in results])[1])
    emp["gap_count"] = len(gaps)

    depths = [d for res in results for d in res.depths]
    grid = [setup.r0 * (j + 1) / config.depth_grid for j in range(config.depth_grid)]
    cdf = depth_distribution(depths, setup.r0, grid) if depths else []
    sup = max((abs(e - t) for _, e, t in cdf), default=math.nan)
    emp["depth_count"] = len(depths)
    emp["depth_cdf"] = [{"r": r, "empirical": e, "theory": t} for r, e, t in cdf]
    emp["depth_sup_distance"] = sup
    report["empirical"] = emp

    def rel(x, y):
        return abs(x - y) / abs(y)

    checks = {"crossing_rate_total": (rel(emp["crossing_rate_total"][0], th["crossing_rate_total"]), "crossing_rate_total")}
    for s in sides:
        checks[f"entry_rate_{s}"] = (rel(emp[f"entry_rate_{s}"][0], th["entry_rate"]), "entry_rate")
        checks[f"return_rate_{s}"] = (rel(emp[f"return_rate_{s}"][0], th["return_rate"]), "return_rate")
    checks["excursion_length"] = (rel(emp["excursion_length"][0], th["excursion_length"]), "excursion_length")
    checks["gap_length"] = (rel(emp["gap_length"][0], th["gap_length"]), "gap_length")
    checks["depth_sup"] = (sup, "depth_sup")
    report["checks"] = {
        k: {"value": v, "tolerance": TOLERANCES[key], "ok": bool(v <= TOLERANCES[key])}
        for k, (v, key) in checks.items()
    }
    report["ok"] = all(c["ok"] for c in report["checks"].values())
    return report


def run_experiment(config: ExperimentConfig) -> dict:
    setup = _Setup(config)
    workers = config.workers or os.cpu_count() or 1
    workers = max(1, min(workers, config.n_traj))
    if workers == 1:
        results = [run_trajectory(i, setup) for i in range(config.n_traj)]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config,)) as pool:
            results = list(pool.map(run_trajectory, range(config.n_traj)))
    max_resampled = max(1, math.ceil(0.01 * config.n_traj))
    bad = sum(1 for res in results if res.resamples)
    if bad > max_resampled:
        raise DegenerateHit(f"{bad} trajectories needed resampling (limit {max_resampled})")
    return aggregate(config, setup, results)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True)
