"""Fuchsian quotient surfaces given by a fundamental polygon with side pairings.

Sides are listed counterclockwise; side ``k`` joins vertex ``k`` to vertex
``k + 1``.  ``pairings[k]`` is the isometry applied when a trajectory leaves
the polygon through side ``k``: it carries side ``k`` onto its partner side
and the neighbouring tile back onto the polygon.

Generator words use one letter per generator; a lowercase letter denotes the
inverse of the uppercase generator (``"Ab"`` is A B^-1).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .collar import CollarSpec, collar_from_width, max_collar_width
from .constants import GEOM_TOL, LIFT_MARGIN, REDUCTION_MAX_STEPS
from .errors import (
    NotHyperbolic,
    ReductionStall,
    SurfaceFormatError,
    UnknownPreset,
    WidthExceedsEmbedding,
)
from .hypcore import (
    INF,
    BoundaryGeodesic,
    Hyperbolic,
    MobiusMap,
    PointH,
    axis_distance_from,
    classify_and_axis,
    crossing_point,
    geodesic_through,
    left_of,
    mobius_point,
    mobius_real,
    normalizer_for_axis,
    param_on,
    point_on,
)

Vertex = Union[float, PointH]


def _is_ideal(v: Vertex) -> bool:
    return not isinstance(v, PointH)


@dataclass(frozen=True)
class Side:
    index: int
    start: Vertex
    end: Vertex
    geodesic: BoundaryGeodesic
    # parameter range of the side along its geodesic (+-inf at ideal vertices)
    t0: float
    t1: float


def _make_side(index: int, start: Vertex, end: Vertex) -> Side:
    if _is_ideal(start) and _is_ideal(end):
        g = BoundaryGeodesic(start, end)
        return Side(index, g.x, g.y, g, -INF, INF)
    if _is_ideal(start):
        g = geodesic_through(end, _ideal_probe(end, start)).reversed()
    elif _is_ideal(end):
        g = geodesic_through(start, _ideal_probe(start, end))
    else:
        g = geodesic_through(start, end)
    t0 = -INF if _is_ideal(start) else param_on(g.x, g.y, start.re, start.im)
    t1 = INF if _is_ideal(end) else param_on(g.x, g.y, end.re, end.im)
    return Side(index, start, end, g, t0, t1)


def _ideal_probe(p: PointH, u: float) -> PointH:
    # a point on the geodesic from p to the ideal point u, used to orient it
    if u == INF:
        return PointH(p.re, p.im * 2.0)
    g = BoundaryGeodesic(u, INF) if abs(p.re - u) < 1e-15 else None
    if g is not None:
        return PointH(u, p.im / 2.0)
    c = (abs(p.z) ** 2 - u * u) / (2.0 * (p.re - u))
    rho = abs(c - u)
    ang = math.atan2(p.im, p.re - c)
    target = math.pi if u < c else 0.0
    mid = (ang + target) / 2.0
    return PointH(c + rho * math.cos(mid), rho * math.sin(mid))


def parse_word(word: str, generators: Dict[str, MobiusMap]) -> MobiusMap:
    m = MobiusMap.identity()
    for ch in word:
        if ch in generators:
            g = generators[ch]
        elif ch.upper() in generators and ch.islower():
            g = generators[ch.upper()].inverse()
        else:
            raise KeyError(f"unknown generator {ch!r} in word {word!r}")
        m = m @ g
    return m


def invert_word(word: str) -> str:
    return "".join(ch.swapcase() for ch in reversed(word))


@dataclass(frozen=True)
class SurfaceSpec:
    name: str
    generators: Dict[str, MobiusMap]
    vertices: Tuple[Vertex, ...]
    sides: Tuple[Side, ...]
    partner: Tuple[int, ...]
    pairings: Tuple[MobiusMap, ...]
    pairing_words: Tuple[str, ...]
    area: float
    interior: PointH = PointH(0.0, 1.0)

    # -- geometry -----------------------------------------------------------

    def contains(self, p: PointH, tol: float = 0.0) -> bool:
        """Closed-polygon membership; ``tol`` is a hyperbolic distance slack."""
        if tol == 0.0:
            return all(left_of(s.geodesic.x, s.geodesic.y, p.re, p.im) >= 0.0 for s in self.sides)
        return all(self.signed_distance(k, p) >= -tol for k in range(len(self.sides)))

    def signed_distance(self, k: int, p: PointH) -> float:
        """Distance from ``p`` to side ``k``'s geodesic, positive inside."""
        g = self.sides[k].geodesic
        re, im = mobius_point(normalizer_for_axis(g).entries, p.re, p.im)
        d = axis_distance_from(re, im)
        return d if re <= 0.0 else -d

    def contains_array(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        inside = np.ones(re.shape, dtype=bool)
        for s in self.sides:
            u, v = s.geodesic.x, s.geodesic.y
            if v == INF:
                inside &= re <= u
            elif u == INF:
                inside &= re >= v
            else:
                inside &= (v - u) * ((re - u) * (re - v) + im * im) >= 0.0
        return inside

    def angle_defect_area(self) -> float:
        n = len(self.vertices)
        angles = 0.0
        for k, v in enumerate(self.vertices):
            if _is_ideal(v):
                continue
            nxt = self.sides[k].geodesic
            prv = self.sides[k - 1].geodesic.reversed()
            angles += _angle_between(nxt, prv, v)
        return (n - 2) * math.pi - angles

    def x_extent(self) -> Tuple[float, float]:
        xs: List[float] = []
        for s in self.sides:
            for u in (s.geodesic.x, s.geodesic.y):
                if u != INF:
                    xs.append(u)
        return min(xs), max(xs)

    def float_pairings(self) -> List[Tuple[float, float, float, float]]:
        return [m.entries for m in self.pairings]

    # -- validation ---------------------------------------------------------

    def problems(self) -> Iterator[Tuple[object, str]]:
        """Yield (key, message) for every violated invariant."""
        n = len(self.sides)
        if n < 3:
            yield "vertex", f"polygon needs at least 3 vertices, got {n}"
            return
        if len(self.pairings) != n or any(p is None for p in self.pairings):
            yield "pair", "every side needs a pairing"
            return
        if not self.contains(self.interior, tol=0.0):
            yield "interior", "interior reference point is outside the polygon"
        onto = []
        for k in range(n):
            j = self.partner[k]
            if not 0 <= j < n:
                yield ("pair", k), f"side {k} paired with unknown side {j}"
                continue
            if self.partner[j] != k:
                yield ("pair", k), f"pairing is not symmetric: {k}->{j} but {j}->{self.partner[j]}"
                continue
            m = self.pairings[k]
            src, dst = self.sides[k], self.sides[j]
            img = {_key(_vertex_image(m, src.start)), _key(_vertex_image(m, src.end))}
            want = {_key(dst.start), _key(dst.end)}
            if not _keys_match(img, want):
                yield ("pair", k), f"map for side {k} does not send it onto side {j}"
                continue
            # a point just outside side k must land inside the polygon
            if not self.contains(m(_outside_probe(src)), tol=1e-7):
                yield ("pair", k), f"map for side {k} does not bring the neighbouring tile back"
                continue
            onto.append(k)
        for k in onto:
            j = self.partner[k]
            if j in onto and not (self.pairings[j] @ self.pairings[k]).is_identity(GEOM_TOL):
                yield ("pair", k), f"pairings of sides {k} and {j} are not mutually inverse"
        maps = list(self.pairings)
        for label, g in self.generators.items():
            if not any(g.isclose(m) or g.isclose(m.inverse()) for m in maps):
                yield ("generator", label), f"generator {label} is not a side pairing"
        defect = self.angle_defect_area()
        if abs(defect - self.area) > GEOM_TOL:
            yield "area", f"declared area {self.area!r} differs from angle defect {defect!r}"

    def validate(self) -> "SurfaceSpec":
        for _, message in self.problems():
            raise SurfaceFormatError(message)
        return self

    # -- quotient -----------------------------------------------------------

    def exit_side(self, x: float, y: float, t: float, entry: int = -1) -> Tuple[int, float, float, float]:
        """First side crossed after parameter ``t`` by the geodesic ``x -> y``.

        Returns (side index, parameter, re, im) of the crossing.
        """
        best = None
        for s in self.sides:
            if s.index == entry:
                continue
            g = s.geodesic
            hit = crossing_point(x, y, g.x, g.y)
            if hit is None:
                continue
            re, im = hit
            if s.t0 != -INF or s.t1 != INF:
                ts = param_on(g.x, g.y, re, im)
                if not s.t0 <= ts <= s.t1:
                    continue
            tt = param_on(x, y, re, im)
            if tt > t and (best is None or tt < best[1]):
                best = (s.index, tt, re, im)
        if best is None:
            raise ReductionStall(f"no exit side for geodesic ({x!r}, {y!r}) after t={t!r}")
        return best


def _angle_between(g1: BoundaryGeodesic, g2: BoundaryGeodesic, p: PointH) -> float:
    def direction(g):
        re, im = p.re, p.im
        if g.y == INF:
            return complex(0.0, 1.0)
        if g.x == INF:
            return complex(0.0, -1.0)
        c = (g.x + g.y) / 2.0
        dz = complex(re - c, im)
        return dz * (-1j if g.y > g.x else 1j)

    d1, d2 = direction(g1), direction(g2)
    cosang = (d1.real * d2.real + d1.imag * d2.imag) / (abs(d1) * abs(d2))
    return math.acos(max(-1.0, min(1.0, cosang)))


def _vertex_image(m: MobiusMap, v: Vertex) -> Vertex:
    return m(v)


def _key(v: Vertex):
    if _is_ideal(v):
        return ("ideal", v)
    return ("point", v.re, v.im)


def _keys_match(a, b) -> bool:
    a, b = sorted(a, key=repr), list(b)
    for ka in a:
        for kb in b:
            if ka[0] == kb[0] and all(
                (u == v) or (u != INF and v != INF and abs(u - v) <= GEOM_TOL * max(1.0, abs(v)))
                for u, v in zip(ka[1:], kb[1:])
            ):
                b.remove(kb)
                break
        else:
            return False
    return not b


def _outside_probe(side: Side) -> PointH:
    """A point a small distance to the right of (outside) the side."""
    g = side.geodesic
    t0 = 0.0
    if side.t0 != -INF or side.t1 != INF:
        lo = side.t0 if side.t0 != -INF else side.t1 - 2.0
        hi = side.t1 if side.t1 != INF else side.t0 + 2.0
        t0 = (lo + hi) / 2.0
    # in the side's normalised frame the outside is Re > 0
    re, im = mobius_point(normalizer_for_axis(g).entries, *point_on(g.x, g.y, t0))
    rho = math.hypot(re, im)
    eps = 1e-4
    back = normalizer_for_axis(g).inverse().entries
    return PointH(*mobius_point(back, rho * math.sin(eps), rho * math.cos(eps)))


# --------------------------------------------------------------------------
# presets and file format

PUNCTURED_TORUS_TEXT = """\
# Once-punctured torus: ideal quadrilateral -1, 0, 1, inf.
name punctured-torus
generator A 1 1 1 2
generator B 1 -1 -1 2
vertex -1
vertex 0
vertex 1
vertex inf
pair 0 2 b
pair 1 3 a
pair 2 0 B
pair 3 1 A
area 6.283185307179586
interior 0 1
"""

PRESETS = {"punctured-torus": PUNCTURED_TORUS_TEXT}


def preset(name: str) -> SurfaceSpec:
    try:
        text = PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    return parse_surface(text)


def _num(tok: str, lineno: int) -> float:
    t = tok.lower()
    if t in ("inf", "infinity", "oo", "+inf", "-inf"):
        return INF
    try:
        return float(tok)
    except ValueError:
        raise SurfaceFormatError(f"expected a number, got {tok!r}", lineno) from None


def parse_surface(text: str) -> SurfaceSpec:
    """Parse and validate a surface description.

    Directives, one per line (``#`` starts a comment)::

        name <id>
        generator <Letter> m00 m01 m10 m11
        vertex <extended real>          # ideal vertex
        vertex <re> <im>                # finite vertex
        pair <side> <partner> <word>    # map applied when leaving via <side>
        area <real>
        interior <re> <im>              # optional reference point, default i
    """
    name = "surface"
    generators: Dict[str, MobiusMap] = {}
    vertices: List[Vertex] = []
    pairs: Dict[int, Tuple[int, str, int]] = {}
    area: Optional[float] = None
    interior = PointH(0.0, 1.0)
    lines: Dict[object, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "name":
            name = " ".join(rest)
        elif head == "generator":
            if len(rest) != 5 or len(rest[0]) != 1 or not rest[0].isupper():
                raise SurfaceFormatError("generator needs an uppercase letter and 4 entries", lineno)
            try:
                generators[rest[0]] = MobiusMap(*(_num(t, lineno) for t in rest[1:]))
            except ValueError as exc:
                raise SurfaceFormatError(str(exc), lineno) from None
            lines[("generator", rest[0])] = lineno
        elif head == "vertex":
            if len(rest) == 1:
                vertices.append(_num(rest[0], lineno))
            elif len(rest) == 2:
                try:
                    vertices.append(PointH(_num(rest[0], lineno), _num(rest[1], lineno)))
                except ValueError as exc:
                    raise SurfaceFormatError(str(exc), lineno) from None
            else:
                raise SurfaceFormatError("vertex needs 1 (ideal) or 2 (finite) numbers", lineno)
            lines.setdefault("vertex", lineno)
        elif head == "pair":
            if len(rest) != 3:
                raise SurfaceFormatError("pair needs <side> <partner> <word>", lineno)
            try:
                k, j = int(rest[0]), int(rest[1])
            except ValueError:
                raise SurfaceFormatError("side indices must be integers", lineno) from None
            if k in pairs:
                raise SurfaceFormatError(f"side {k} paired twice", lineno)
            pairs[k] = (j, rest[2], lineno)
            lines[("pair", k)] = lineno
        elif head == "area":
            if len(rest) != 1:
                raise SurfaceFormatError("area needs one number", lineno)
            area = _num(rest[0], lineno)
            lines["area"] = lineno
        elif head == "interior":
            if len(rest) != 2:
                raise SurfaceFormatError("interior needs <re> <im>", lineno)
            try:
                interior = PointH(_num(rest[0], lineno), _num(rest[1], lineno))
            except ValueError as exc:
                raise SurfaceFormatError(str(exc), lineno) from None
            lines["interior"] = lineno
        else:
            raise SurfaceFormatError(f"unknown directive {head!r}", lineno)

    if area is None:
        raise SurfaceFormatError("missing 'area' line")
    n = len(vertices)
    if n < 3:
        raise SurfaceFormatError(f"polygon needs at least 3 vertices, got {n}", lines.get("vertex"))
    sides = tuple(_make_side(k, vertices[k], vertices[(k + 1) % n]) for k in range(n))
    partner = []
    maps = []
    words = []
    for k in range(n):
        if k not in pairs:
            raise SurfaceFormatError(f"side {k} has no pairing")
        j, word, lineno = pairs[k]
        try:
            maps.append(parse_word(word, generators))
        except KeyError as exc:
            raise SurfaceFormatError(exc.args[0], lineno) from None
        partner.append(j)
        words.append(word)
    extra = sorted(set(pairs) - set(range(n)))
    if extra:
        raise SurfaceFormatError(f"pairing for nonexistent side {extra[0]}", pairs[extra[0]][2])

    spec = SurfaceSpec(
        name=name,
        generators=generators,
        vertices=tuple(vertices),
        sides=sides,
        partner=tuple(partner),
        pairings=tuple(maps),
        pairing_words=tuple(words),
        area=area,
        interior=interior,
    )
    for key, message in spec.problems():
        lineno = lines.get(key)
        if lineno is None and isinstance(key, tuple):
            lineno = lines.get(key[0])
        raise SurfaceFormatError(message, lineno)
    return spec


def load_surface(path: Union[str, Path]) -> SurfaceSpec:
    return parse_surface(Path(path).read_text())


def describe(spec: SurfaceSpec) -> dict:
    def fmt(v):
        if _is_ideal(v):
            return "inf" if v == INF else v
        return [v.re, v.im]

    return {
        "name": spec.name,
        "area": spec.area,
        "angle_defect_area": spec.angle_defect_area(),
        "euler_characteristic": -spec.area / (2.0 * math.pi),
        "generators": {k: list(m.entries) for k, m in spec.generators.items()},
        "vertices": [fmt(v) for v in spec.vertices],
        "pairings": [
            {"side": k, "partner": spec.partner[k], "word": spec.pairing_words[k]}
            for k in range(len(spec.sides))
        ],
    }


# --------------------------------------------------------------------------
# quotient operations


def reduce(spec: SurfaceSpec, p: PointH, max_steps: int = REDUCTION_MAX_STEPS) -> Tuple[PointH, MobiusMap]:
    """Bring ``p`` into the closed fundamental polygon.

    Walks the geodesic segment from the interior reference point to ``p``
    and applies the pairing of every side it crosses.  Returns (q, g) with
    g(p) = q.
    """
    if spec.contains(p):
        return p, MobiusMap.identity()
    ref = spec.interior
    line = geodesic_through(ref, p)
    x, y = line.x, line.y
    t = param_on(x, y, ref.re, ref.im)
    t_end = param_on(x, y, p.re, p.im)
    g = MobiusMap.identity()
    entry = -1
    for _ in range(max_steps):
        k, t_exit, re, im = spec.exit_side(x, y, t, entry)
        if t_exit >= t_end:
            q = PointH(*point_on(x, y, t_end))
            return q, g
        m = spec.pairings[k]
        me = m.entries
        x, y = mobius_real(me, x), mobius_real(me, y)
        re, im = mobius_point(me, re, im)
        t_new = param_on(x, y, re, im)
        t_end = t_end - t_exit + t_new
        t = t_new
        entry = spec.partner[k]
        g = m @ g
    raise ReductionStall(f"reduction of {p} did not terminate in {max_steps} steps")


@dataclass(frozen=True)
class GeodesicTarget:
    """A closed geodesic together with the half-collar side it is counted from.

    ``normalizer`` conjugates ``core_element`` to z -> e^length z; the A
    half-collar of the target lies in the right half-plane of that frame.
    """

    label: str
    word: str
    side: str
    core_element: MobiusMap
    length: float
    normalizer: MobiusMap

    @property
    def axis(self) -> BoundaryGeodesic:
        n = self.normalizer.inverse()
        return BoundaryGeodesic(n(0.0), n(INF))


_SWAP_HALVES = MobiusMap(0.0, -1.0, 1.0, 0.0)


def target_from_word(spec: SurfaceSpec, word: str, side: str = "A", label: Optional[str] = None) -> GeodesicTarget:
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    core = parse_word(word, spec.generators)
    kind = classify_and_axis(core)
    if not isinstance(kind, Hyperbolic):
        raise NotHyperbolic(f"word {word!r} is {type(kind).__name__.lower()}")
    n0 = normalizer_for_axis(kind.axis)
    w = n0(spec.interior)
    s = math.sqrt(abs(w.z))
    normalizer = MobiusMap(1.0 / s, 0.0, 0.0, s) @ n0
    if side == "B":
        core = core.inverse()
        normalizer = _SWAP_HALVES @ normalizer
    return GeodesicTarget(
        label=label or f"{word}:{side}",
        word=word,
        side=side,
        core_element=core,
        length=kind.length,
        normalizer=normalizer,
    )


@dataclass(frozen=True)
class Lift:
    """One lift of the target geodesic whose collar meets the polygon.

    Arcs are log-radius intervals along the imaginary axis (core) or along
    the boundary rays (A: right, B: left) in this lift's normalised frame.
    """

    element: MobiusMap
    normalizer: MobiusMap
    distance: float
    core_arcs: Tuple[Tuple[float, float], ...]
    a_arcs: Tuple[Tuple[float, float], ...]
    b_arcs: Tuple[Tuple[float, float], ...]
    bbox: Optional[Tuple[float, float, float, float]]


@dataclass(frozen=True)
class Arc:
    kind: str  # "core", "A" or "B"
    lift: int
    s0: float
    s1: float
    length: float


@dataclass(frozen=True)
class ArcTable:
    target: GeodesicTarget
    r: float
    collar: CollarSpec
    lifts: Tuple[Lift, ...]

    def arcs(self, kind: Optional[str] = None) -> List[Arc]:
        out = []
        scale = {"core": 1.0, "A": math.cosh(self.r), "B": math.cosh(self.r)}
        for i, lift in enumerate(self.lifts):
            for k, pieces in (("core", lift.core_arcs), ("A", lift.a_arcs), ("B", lift.b_arcs)):
                if kind is not None and k != kind:
                    continue
                for s0, s1 in pieces:
                    out.append(Arc(k, i, s0, s1, (s1 - s0) * scale[k]))
        return out

    def total_length(self, kind: str) -> float:
        return sum(a.length for a in self.arcs(kind))

    def arc_point(self, arc: Arc, s: float) -> PointH:
        """Point at log-radius ``s`` on ``arc``, in polygon coordinates."""
        lift = self.lifts[arc.lift]
        direction = _ray_direction(arc.kind, self.collar)
        z = math.exp(s) * direction
        re, im = mobius_point(lift.normalizer.inverse().entries, z.real, z.imag)
        return PointH(re, im)


def _ray_direction(kind: str, collar: CollarSpec) -> complex:
    if kind == "core":
        return 1j
    if kind == "A":
        return complex(collar.a, collar.b)
    return complex(-collar.a, collar.b)


def _axis_distance_on_segment(xn: float, yn: float, t0: float, t1: float) -> float:
    """Distance from the imaginary axis to the part of geodesic xn -> yn
    with parameter in [t0, t1]."""
    if xn == INF or yn == INF:
        u = yn if xn == INF else xn
        if u == 0.0:
            return 0.0
        # im = e^{+-t}; the far end towards infinity is asymptotic to the axis
        towards_inf_param = INF if yn == INF else -INF
        if (towards_inf_param == INF and t1 == INF) or (towards_inf_param == -INF and t0 == -INF):
            return 0.0
        tt = t1 if towards_inf_param == INF else t0
        _, im = point_on(xn, yn, tt)
        return math.asinh(abs(u) / im)
    if xn == 0.0 or yn == 0.0:
        return 0.0
    prod = xn * yn
    if prod < 0.0:
        tstar = 0.5 * math.log(-xn / yn)
        if t0 <= tstar <= t1:
            return 0.0
    candidates = []
    if prod > 0.0:
        tstar = 0.5 * math.log(xn / yn)
        if t0 <= tstar <= t1:
            candidates.append(tstar)
    for tt in (t0, t1):
        if math.isfinite(tt):
            candidates.append(tt)
    if not candidates:
        return INF
    best = INF
    for tt in candidates:
        re, im = point_on(xn, yn, tt)
        best = min(best, axis_distance_from(re, im))
    return best


def lift_distance(spec: SurfaceSpec, normalizer: MobiusMap) -> float:
    """Distance between the polygon and the lift normalised by ``normalizer``."""
    ne = normalizer.entries
    ni = normalizer.inverse().entries
    best = INF
    for s in spec.sides:
        g = s.geodesic
        xn, yn = mobius_real(ne, g.x), mobius_real(ne, g.y)
        if xn == yn:
            continue
        t0, t1 = -INF, INF
        if s.t0 != -INF:
            re, im = mobius_point(ne, *point_on(g.x, g.y, s.t0))
            t0 = param_on(xn, yn, re, im)
        if s.t1 != INF:
            re, im = mobius_point(ne, *point_on(g.x, g.y, s.t1))
            t1 = param_on(xn, yn, re, im)
        best = min(best, _axis_distance_on_segment(xn, yn, t0, t1))
    del ni
    return best


def _ray_crossings(spec: SurfaceSpec, normalizer: MobiusMap, direction: complex) -> List[float]:
    """Log-radii where the ray {s * direction} crosses polygon sides."""
    ne = normalizer.entries
    ca = direction.real
    out = []
    for side in spec.sides:
        g = side.geodesic
        xn, yn = mobius_real(ne, g.x), mobius_real(ne, g.y)
        roots = []
        if xn == INF or yn == INF:
            u = yn if xn == INF else xn
            if ca != 0.0 and u / ca > 0.0:
                roots.append(u / ca)
        else:
            c = (xn + yn) / 2.0
            disc = (c * ca) ** 2 - xn * yn
            if disc > 0.0:
                sq = math.sqrt(disc)
                for s in (c * ca - sq, c * ca + sq):
                    if s > 0.0:
                        roots.append(s)
        for s in roots:
            if side.t0 != -INF or side.t1 != INF:
                z = s * direction
                re, im = mobius_point(normalizer.inverse().entries, z.real, z.imag)
                ts = param_on(g.x, g.y, re, im)
                if not side.t0 - 1e-12 <= ts <= side.t1 + 1e-12:
                    continue
            out.append(math.log(s))
    return sorted(out)


def _ray_arcs(spec: SurfaceSpec, normalizer: MobiusMap, direction: complex) -> Tuple[Tuple[float, float], ...]:
    logs = _ray_crossings(spec, normalizer, direction)
    if not logs:
        return ()
    inv = normalizer.inverse().entries

    def inside(s):
        z = math.exp(s) * direction
        return spec.contains(PointH(*mobius_point(inv, z.real, z.imag)))

    if inside(logs[0] - 1.0) or inside(logs[-1] + 1.0):
        raise WidthExceedsEmbedding("collar boundary runs into a cusp of the polygon")
    arcs = []
    for s0, s1 in zip(logs, logs[1:]):
        if s1 - s0 > 1e-14 and inside(0.5 * (s0 + s1)):
            arcs.append((s0, s1))
    return tuple(arcs)


def _region_bbox(spec: SurfaceSpec, normalizer: MobiusMap, collar: CollarSpec, s_lo: float, s_hi: float):
    """Euclidean bounding box of (collar lift) intersected with the polygon,
    padded by twice the largest grid-cell diameter near the region."""
    ns, nt = 401, 41
    s = np.linspace(s_lo, s_hi, ns)
    theta = np.linspace(math.pi / 2 - collar.phi, math.pi / 2 + collar.phi, nt)
    S, TH = np.meshgrid(s, theta, indexing="ij")
    z = np.exp(S) * np.exp(1j * TH)
    a, b, c, d = normalizer.inverse().entries
    w = (a * z + b) / (c * z + d)
    re, im = w.real, np.abs(w.imag)
    mask = spec.contains_array(re, im)
    if not mask.any():
        return None
    # cell diameters: for each cell touching a kept node, diagonal lengths
    near = mask.copy()
    near[1:, :] |= mask[:-1, :]
    near[:-1, :] |= mask[1:, :]
    near[:, 1:] |= mask[:, :-1]
    near[:, :-1] |= mask[:, 1:]
    ds = np.abs(np.diff(w, axis=0))
    dt = np.abs(np.diff(w, axis=1))
    pad = max(float(ds[near[:-1, :] & near[1:, :]].max(initial=0.0)),
              float(dt[near[:, :-1] & near[:, 1:]].max(initial=0.0)))
    pad = 2.0 * pad + 1e-9
    return (
        float(re[mask].min()) - pad,
        float(re[mask].max()) + pad,
        max(float(im[mask].min()) - pad, 0.0),
        float(im[mask].max()) + pad,
    )


def build_arc_table(spec: SurfaceSpec, target: GeodesicTarget, r: float, max_lifts: int = 10000) -> ArcTable:
    """Enumerate every lift whose r-collar meets the polygon.

    Breadth-first search over lifts g * axis, moving to neighbouring tiles by
    the side pairings; a lift is kept (and expanded) while its distance to
    the polygon is below r.  Tiles meeting the convex collar are connected
    through shared sides, so the search is exhaustive.
    """
    rmax = max_collar_width(target.length)
    if not 0.0 < r < rmax:
        raise WidthExceedsEmbedding(f"need 0 < r < {rmax!r}, got {r!r}")
    collar = collar_from_width(target.length, r)
    base_norm = target.normalizer
    base_axis = target.axis

    def key(g: MobiusMap):
        ax = base_axis.image(g)
        return tuple(u if u == INF else float(f"{u:.9g}") for u in (ax.x, ax.y))

    start = MobiusMap.identity()
    seen = {key(start)}
    queue = deque([start])
    kept: List[Tuple[MobiusMap, MobiusMap, float]] = []
    while queue:
        g = queue.popleft()
        norm = base_norm @ g.inverse()
        dist = lift_distance(spec, norm)
        if not dist < r + LIFT_MARGIN:
            continue
        kept.append((g, norm, dist))
        if len(kept) > max_lifts:
            raise WidthExceedsEmbedding("lift enumeration did not terminate; is the geodesic simple?")
        for m in spec.pairings:
            h = m @ g
            k = key(h)
            if k not in seen:
                seen.add(k)
                queue.append(h)

    a_dir = _ray_direction("A", collar)
    b_dir = _ray_direction("B", collar)
    lifts = []
    for g, norm, dist in kept:
        core = _ray_arcs(spec, norm, 1j)
        a_arcs = _ray_arcs(spec, norm, a_dir)
        b_arcs = _ray_arcs(spec, norm, b_dir)
        ends = [v for arc in a_arcs + b_arcs for v in arc]
        bbox = _region_bbox(spec, norm, collar, min(ends), max(ends)) if ends else None
        lifts.append(Lift(g, norm, dist, core, a_arcs, b_arcs, bbox))
    return ArcTable(target=target, r=r, collar=collar, lifts=tuple(lifts))
