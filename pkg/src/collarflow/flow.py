"""Event-driven geodesic flow on a quotient surface.

The trajectory is kept as a segment of an oriented geodesic inside the
fundamental polygon.  Each step finds the side the segment leaves through,
reports collar events on the way, and applies the side pairing.  Events are
computed exactly from the endpoints of the current geodesic in each lift's
normalised frame, so no time stepping is involved.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .collar import EntrySide, classify_entry
from .constants import EVENT_TOL
from .errors import DegenerateEndpoint, DegenerateHit
from .hypcore import (
    INF,
    BoundaryGeodesic,
    MobiusMap,
    PointH,
    TangentLine,
    TangentVector,
    axis_depth,
    crossing_point,
    line_from_vector,
    mobius_point,
    mobius_real,
    param_on,
    point_on,
    vector_from_line,
)
from .surface import ArcTable, SurfaceSpec, reduce


class EventKind(str, enum.Enum):
    ENTER = "enter"
    EXIT = "exit"
    CORE = "core"
    SIDE = "side"


class Event(NamedTuple):
    time: float
    kind: str
    target: int
    side: str  # collar side for enter/exit, side left from for core, polygon side for side
    cls: str = ""  # R1 / R2 / R3 on entries
    depth: float = 0.0  # distance from the core, on entries

    def dump(self, labels: Sequence[str]) -> str:
        label = labels[self.target] if self.target >= 0 else "-"
        return f"{self.time:.12f} {self.kind} {label} {self.side} {self.cls or '-'}"


@dataclass
class FlowState:
    """Position of a trajectory: geodesic ``x -> y`` at parameter ``t``,
    last entered through polygon side ``entry`` (-1 if it started inside)."""

    x: float
    y: float
    t: float
    entry: int = -1
    time: float = 0.0
    # product of the pairings applied so far; None unless tracked
    conditioner: Optional[MobiusMap] = None

    @property
    def line(self) -> TangentLine:
        return TangentLine(BoundaryGeodesic(self.x, self.y), self.t)

    @property
    def t_global(self) -> float:
        return self.time

    @property
    def point(self) -> PointH:
        return PointH(*point_on(self.x, self.y, self.t))

    def vector(self) -> TangentVector:
        return vector_from_line(self.line)


def start_state(spec: SurfaceSpec, v: TangentVector) -> FlowState:
    """Flow state for a unit tangent vector, reduced into the polygon."""
    q, g = reduce(spec, v.base)
    line = line_from_vector(v)
    img = line.line.image(g)
    t = param_on(img.x, img.y, q.re, q.im)
    return FlowState(img.x, img.y, t, conditioner=g)


@dataclass
class EventLog:
    events: List[Event] = field(default_factory=list)
    duration: float = 0.0
    initial_inside: Tuple[str, ...] = ()  # per target: "", "A" or "B"
    final_inside: Tuple[str, ...] = ()
    side_crossings: int = 0
    start: float = 0.0

    def of_kind(self, kind: str, target: Optional[int] = None) -> List[Event]:
        return [e for e in self.events if e.kind == kind and (target is None or e.target == target)]

    def dump(self, labels: Sequence[str]) -> str:
        return "\n".join(e.dump(labels) for e in self.events)


class _LiftData(NamedTuple):
    target: int
    norm: Tuple[float, float, float, float]
    inv: Tuple[float, float, float, float]
    bbox: Optional[Tuple[float, float, float, float]]
    a: float
    b: float


def _lift_data(tables: Sequence[ArcTable]) -> List[_LiftData]:
    out = []
    for i, table in enumerate(tables):
        for lift in table.lifts:
            out.append(
                _LiftData(i, lift.normalizer.entries, lift.normalizer.inverse().entries, lift.bbox, table.collar.a, table.collar.b)
            )
    return out


def _inside_collar(lifts: Sequence[_LiftData], ntargets: int, re: float, im: float) -> List[str]:
    flags = [""] * ntargets
    for L in lifts:
        pr, pi = mobius_point(L.norm, re, im)
        if abs(pr) * L.b < L.a * pi:
            flags[L.target] = "A" if pr > 0.0 else "B"
    return flags


def _ray_events(xn, yn, ca, sb, ray):
    """Log-radius crossings of the ray s*(ca + i sb) by xn -> yn, each with
    an entering flag.  ``ray`` is +1 for the A ray and -1 for the B ray."""
    if yn == INF or xn == INF:
        u = xn if yn == INF else yn
        s = u / ca
        if s <= 0.0:
            return ()
        return ((s, yn == INF),)
    c = 0.5 * (xn + yn)
    p = c * ca
    prod = xn * yn
    disc = p * p - prod
    if prod < 0.0:
        s = p + math.sqrt(disc)
        # crossing the axis: an entry iff the geodesic starts on this ray's side
        return ((s, xn * ray > 0.0),)
    if disc <= 0.0 or p <= 0.0:
        return ()
    if disc <= 1e-12 * p * p:
        raise DegenerateHit("geodesic nearly tangent to a collar boundary")
    sq = math.sqrt(disc)
    big = p + sq
    small = prod / big
    # the earlier crossing along the geodesic is the entry
    return ((small, None), (big, None))


def trace(
    spec: SurfaceSpec,
    tables: Sequence[ArcTable],
    state: FlowState,
    duration: float,
    *,
    record_sides: bool = False,
    prune: bool = True,
    max_segments: Optional[int] = None,
    track_conditioner: bool = False,
    on_segment: Optional[Callable[[float, float, float, float], None]] = None,
) -> Tuple[EventLog, FlowState]:
    """Flow ``state`` for ``duration`` and collect collar events.

    ``tables`` holds one arc table per target; event ``target`` fields index
    into it.  ``on_segment(x, y, t, time)`` is called after every pairing
    with the new state, for monitoring.  The conditioner product grows
    exponentially along the flow, so it is only kept on request.  Raises DegenerateHit when an event falls within EVENT_TOL of
    a segment boundary or a crossing is nearly tangent; callers resample.
    """
    x, y, t, entry = state.x, state.y, state.t, state.entry
    clock = state.time
    cond = state.conditioner
    if track_conditioner and cond is None:
        cond = MobiusMap.identity()
    t_end_clock = clock + duration
    lifts = _lift_data(tables)
    ntargets = len(tables)
    sides = [(s.geodesic.x, s.geodesic.y, s.t0, s.t1) for s in spec.sides]
    ideal = all(s.t0 == -INF and s.t1 == INF for s in spec.sides)
    pairings = spec.float_pairings()
    partner = spec.partner
    events: List[Event] = []
    append = events.append
    tol = EVENT_TOL

    re0, im0 = point_on(x, y, t)
    initial = tuple(_inside_collar(lifts, ntargets, re0, im0))
    nseg = 0
    while True:
        # exit side
        best_k, best_t, bre, bim = -1, INF, 0.0, 0.0
        for k, (u, v, s0, s1) in enumerate(sides):
            if k == entry:
                continue
            hit = crossing_point(x, y, u, v)
            if hit is None:
                continue
            hre, him = hit
            if not ideal and (s0 != -INF or s1 != INF):
                ts = param_on(u, v, hre, him)
                if not s0 <= ts <= s1:
                    continue
            tk = param_on(x, y, hre, him)
            if t < tk < best_t:
                best_k, best_t, bre, bim = k, tk, hre, him
        if best_k < 0:
            raise DegenerateHit("segment has no exit side")
        seg_len = best_t - t
        last = clock + seg_len >= t_end_clock
        t_stop = t + (t_end_clock - clock) if last else best_t

        # collar events on (t, t_stop]
        if lifts:
            if not prune:
                cands = lifts
            else:
                sre, sim = point_on(x, y, t_stop)
                lo_re, hi_re = (re0, sre) if re0 < sre else (sre, re0)
                lo_im, hi_im = (im0, sim) if im0 < sim else (sim, im0)
                if x != INF and y != INF and t < 0.0 < t_stop:
                    hi_im = 0.5 * abs(y - x)
                cands = [
                    L
                    for L in lifts
                    if L.bbox is not None
                    and L.bbox[0] <= hi_re
                    and lo_re <= L.bbox[1]
                    and L.bbox[2] <= hi_im
                    and lo_im <= L.bbox[3]
                ]
            seg_events = []
            for L in cands:
                ne = L.norm
                xn, yn = mobius_real(ne, x), mobius_real(ne, y)
                pr, pi = mobius_point(ne, re0, im0)
                delta = t - param_on(xn, yn, pr, pi)
                lo, hi = t - delta, t_stop - delta
                tgt = L.target
                # core
                if xn != INF and yn != INF and xn * yn < 0.0:
                    tc = param_on(xn, yn, 0.0, math.sqrt(-xn * yn))
                    if lo < tc <= hi:
                        _guard(tc, lo, hi, last, tol)
                        seg_events.append((tc + delta, EventKind.CORE.value, tgt, "A" if xn > 0.0 else "B", "", 0.0))
                for side_label, ca, ray in (("A", L.a, 1.0), ("B", -L.a, -1.0)):
                    hits = _ray_events(xn, yn, ca, L.b, ray)
                    if not hits:
                        continue
                    if len(hits) == 2:
                        ts = [param_on(xn, yn, *_ray_point(s, ca, L.b)) for s, _ in hits]
                        order = (0, 1) if ts[0] < ts[1] else (1, 0)
                        pairs = ((ts[order[0]], True), (ts[order[1]], False))
                    else:
                        s, entering = hits[0]
                        pairs = ((param_on(xn, yn, *_ray_point(s, ca, L.b)), entering),)
                    for tr, entering in pairs:
                        if not lo < tr <= hi:
                            continue
                        _guard(tr, lo, hi, last, tol)
                        if entering:
                            depth = axis_depth(xn, yn)
                            try:
                                cls = classify_entry(xn, yn) if ray > 0 else classify_entry(-xn, -yn)
                            except (DegenerateEndpoint, ValueError) as exc:
                                raise DegenerateHit(str(exc)) from None
                            seg_events.append((tr + delta, EventKind.ENTER.value, tgt, side_label, cls.value, depth))
                        else:
                            seg_events.append((tr + delta, EventKind.EXIT.value, tgt, side_label, "", 0.0))
            if seg_events:
                seg_events.sort(key=lambda e: e[0])
                for e in seg_events:
                    append(Event(clock + (e[0] - t), *e[1:]))

        if last:
            t_final = t_stop
            clock = t_end_clock
            break

        clock += seg_len
        nseg += 1
        if record_sides:
            append(Event(clock, EventKind.SIDE.value, -1, str(best_k)))
        m = pairings[best_k]
        x, y = mobius_real(m, x), mobius_real(m, y)
        re0, im0 = mobius_point(m, bre, bim)
        t = param_on(x, y, re0, im0)
        entry = partner[best_k]
        if track_conditioner:
            cond = spec.pairings[best_k] @ cond
        if on_segment is not None:
            on_segment(x, y, t, clock)
        if max_segments is not None and nseg >= max_segments:
            t_final = t
            break

    fre, fim = point_on(x, y, t_final)
    final = tuple(_inside_collar(lifts, ntargets, fre, fim))
    log = EventLog(events, clock - state.time, initial, final, nseg, state.time)
    return log, FlowState(x, y, t_final, entry, clock, cond)


def _ray_point(s: float, ca: float, sb: float) -> Tuple[float, float]:
    return s * ca, s * sb


def _guard(tv: float, lo: float, hi: float, last: bool, tol: float) -> None:
    scale = tol * max(1.0, abs(tv))
    if tv - lo <= scale or (not last and hi - tv <= scale):
        raise DegenerateHit(f"event at {tv!r} within tolerance of segment end ({lo!r}, {hi!r})")


# --------------------------------------------------------------------------
# derived statistics of an event log


@dataclass(frozen=True)
class ExcursionRecord:
    """One visit to a collar: entered through ``enter_side`` at ``t_in`` and
    left through ``exit_side`` at ``t_out``."""

    target: int
    enter_side: str
    exit_side: str
    t_in: float
    t_out: float
    entry_class: str
    depth: float
    crossed_core: bool

    @property
    def kind(self) -> str:
        return f"{self.enter_side}->{self.exit_side}"


def excursions(log: EventLog, target: int) -> List[ExcursionRecord]:
    """Complete collar visits of ``target`` in time order.

    Each entry is paired with the next exit of the same target.  A visit in
    progress at the start of the log, or still open at its end, is dropped.
    """
    out = []
    current = None
    crossed = False
    for e in log.events:
        if e.target != target:
            continue
        if e.kind == EventKind.ENTER.value:
            current, crossed = e, False
        elif e.kind == EventKind.CORE.value:
            crossed = True
        elif e.kind == EventKind.EXIT.value:
            if current is not None:
                out.append(
                    ExcursionRecord(target, current.side, e.side, current.time, e.time, current.cls, current.depth, crossed)
                )
            current = None
    return out


def excursion_depth(spec: SurfaceSpec, table: ArcTable, state: FlowState, horizon: float = 50.0) -> Optional[float]:
    """Depth of the first complete visit to ``table``'s collar, or None."""
    log, _ = trace(spec, [table], state, horizon)
    exc = excursions(log, 0)
    return exc[0].depth if exc else None


def occupation_time(log: EventLog, target: int) -> float:
    """Time spent inside the collar of ``target``."""
    inside_since = log.start if log.initial_inside and log.initial_inside[target] else None
    total = 0.0
    for e in log.events:
        if e.target != target:
            continue
        if e.kind == EventKind.ENTER.value:
            inside_since = e.time
        elif e.kind == EventKind.EXIT.value and inside_since is not None:
            total += e.time - inside_since
            inside_since = None
    if inside_since is not None:
        total += log.start + log.duration - inside_since
    return total
