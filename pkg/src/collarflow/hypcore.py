"""Upper half-plane primitives: Mobius maps, oriented geodesics and the
(x, y, t) coordinates of the unit tangent bundle.

A unit tangent vector is identified with a triple (x, y, t): the geodesic
runs from the backward endpoint ``x`` to the forward endpoint ``y`` and is
parameterised by arc length with ``t = 0`` at the top of the semicircle.
For a vertical geodesic through ``c`` the origin is the point ``c + i``.
The point at infinity is ``math.inf``; ``-inf`` is folded onto it.

The object layer (``MobiusMap``, ``PointH``, ...) is immutable.  The
underscore-free float helpers further down (``point_on``, ``param_on``,
``crossing_point`` ...) are what the tracer uses in its inner loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .constants import DET_TOL, GEOM_TOL, PARABOLIC_TOL
from .errors import IdentityMap, OffGeodesic

INF = math.inf

Mat = Tuple[float, float, float, float]


def _ext(u: float) -> float:
    u = float(u)
    return INF if math.isinf(u) else u


# --------------------------------------------------------------------------
# float kernels


def mobius_real(m: Mat, u: float) -> float:
    """Image of an extended real under ``m``."""
    a, b, c, d = m
    if u == INF:
        return a / c if c != 0.0 else INF
    den = c * u + d
    if den == 0.0:
        return INF
    return (a * u + b) / den


def mobius_point(m: Mat, re: float, im: float) -> Tuple[float, float]:
    a, b, c, d = m
    cr = c * re + d
    ci = c * im
    den = cr * cr + ci * ci
    ar = a * re + b
    return (ar * cr + a * ci * im) / den, im / den


def point_on(x: float, y: float, t: float) -> Tuple[float, float]:
    """Point at arc-length parameter ``t`` on the geodesic ``x -> y``."""
    if y == INF:
        return x, math.exp(t)
    if x == INF:
        return y, math.exp(-t)
    if t > 0.0:
        v = math.exp(-t)
        v2 = v * v
        return (x * v2 + y) / (1.0 + v2), v * abs(y - x) / (1.0 + v2)
    w = math.exp(t)
    w2 = w * w
    return (x + y * w2) / (1.0 + w2), w * abs(y - x) / (1.0 + w2)


def param_on(x: float, y: float, re: float, im: float) -> float:
    """Arc-length parameter of a point assumed to lie on ``x -> y``."""
    if y == INF:
        return math.log(im)
    if x == INF:
        return -math.log(im)
    dx = abs(re - x)
    dy = abs(y - re)
    if dx >= dy:
        return math.log(dx / im)
    return -math.log(dy / im)


def _in_arc(u: float, p: float, q: float) -> int:
    """+1 if ``u`` is strictly inside the boundary arc bounded by p, q that
    avoids infinity (or lies to the right of a finite p when q is infinite),
    -1 if strictly outside, 0 if it coincides with an endpoint."""
    if u == p or u == q:
        return 0
    if q == INF:
        p, q = q, p
    if p == INF:
        if u == INF:
            return 0
        return 1 if u > q else -1
    lo, hi = (p, q) if p < q else (q, p)
    if u == INF:
        return -1
    return 1 if lo < u < hi else -1


def interleaved(x1: float, y1: float, x2: float, y2: float) -> bool:
    """True iff the endpoint pairs separate each other on the boundary."""
    s1 = _in_arc(x2, x1, y1)
    s2 = _in_arc(y2, x1, y1)
    return s1 * s2 == -1


def crossing_point(x1: float, y1: float, x2: float, y2: float) -> Optional[Tuple[float, float]]:
    """Intersection point of two geodesics, or None if they do not cross."""
    if not interleaved(x1, y1, x2, y2):
        return None
    if x1 == INF or y1 == INF:
        x1, y1, x2, y2 = x2, y2, x1, y1
    if x2 == INF or y2 == INF:
        X = y2 if x2 == INF else x2
    else:
        X = (x1 * y1 - x2 * y2) / (x1 + y1 - x2 - y2)
    Y2 = -(X - x1) * (X - y1)
    if Y2 <= 0.0:
        return None
    return X, math.sqrt(Y2)


def left_of(u: float, v: float, re: float, im: float) -> float:
    """Positive iff the point lies to the left of the geodesic ``u -> v``.

    The magnitude is not a distance; only the sign is meaningful.
    """
    if v == INF:
        return u - re
    if u == INF:
        return re - v
    return (v - u) * ((re - u) * (re - v) + im * im)


def axis_distance_from(re: float, im: float) -> float:
    """Hyperbolic distance from a point to the imaginary axis."""
    return math.asinh(abs(re) / im)


def axis_depth(x: float, y: float) -> float:
    """Distance between the geodesic ``x -> y`` and the imaginary axis."""
    if x == INF or y == INF:
        return 0.0
    p = x * y
    if p <= 0.0:
        return 0.0
    return math.asinh(2.0 * math.sqrt(p) / abs(x - y))


# --------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class MobiusMap:
    """Orientation-preserving isometry z -> (a z + b) / (c z + d), det 1.

    Entries are rescaled to unit determinant on construction and the sign is
    canonicalised (first nonzero entry positive), so ``m`` and ``-m`` compare
    and hash equal.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = (float(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not det > 0.0 or not math.isfinite(det):
            raise ValueError(f"Mobius map needs positive determinant, got {det!r}")
        if abs(det - 1.0) > DET_TOL:
            s = math.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        for v in (a, b, c, d):
            if v != 0.0:
                if v < 0.0:
                    a, b, c, d = -a, -b, -c, -d
                break
        # normalise -0.0 so equal maps hash equal
        a, b, c, d = (v + 0.0 for v in (a, b, c, d))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diagonal(cls, length: float) -> "MobiusMap":
        """z -> e^length z."""
        h = math.exp(length / 2.0)
        return cls(h, 0.0, 0.0, 1.0 / h)

    @property
    def entries(self) -> Mat:
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return MobiusMap(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def __call__(self, z):
        if isinstance(z, PointH):
            return mobius_apply(self, z)
        if isinstance(z, complex):
            return (self.a * z + self.b) / (self.c * z + self.d)
        return mobius_real(self.entries, _ext(z))

    def is_identity(self, tol: float = GEOM_TOL) -> bool:
        return self.isclose(MobiusMap.identity(), tol)

    def isclose(self, other: "MobiusMap", tol: float = GEOM_TOL) -> bool:
        d1 = max(abs(u - v) for u, v in zip(self.entries, other.entries))
        d2 = max(abs(u + v) for u, v in zip(self.entries, other.entries))
        return min(d1, d2) <= tol


@dataclass(frozen=True)
class PointH:
    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0.0:
            raise ValueError(f"point must lie in the upper half-plane, im={self.im!r}")

    @classmethod
    def from_complex(cls, z: complex) -> "PointH":
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class BoundaryGeodesic:
    """Oriented geodesic from ``x`` (backward endpoint) to ``y``."""

    x: float
    y: float

    def __post_init__(self):
        x, y = _ext(self.x), _ext(self.y)
        if x == y:
            raise ValueError("geodesic endpoints must differ")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def is_vertical(self) -> bool:
        return self.x == INF or self.y == INF

    @property
    def center(self) -> float:
        return (self.x + self.y) / 2.0

    @property
    def radius(self) -> float:
        return abs(self.y - self.x) / 2.0

    def reversed(self) -> "BoundaryGeodesic":
        return BoundaryGeodesic(self.y, self.x)

    def frame(self) -> MobiusMap:
        """Map F with F(0) = x, F(inf) = y and F(i e^t) = point at t."""
        x, y = self.x, self.y
        if y == INF:
            return MobiusMap(1.0, x, 0.0, 1.0)
        if x == INF:
            return MobiusMap(y, -1.0, 1.0, 0.0)
        k = 1.0 if y > x else -1.0
        return MobiusMap(k * y, x, k, 1.0)

    def image(self, m: MobiusMap) -> "BoundaryGeodesic":
        return BoundaryGeodesic(m(self.x), m(self.y))


@dataclass(frozen=True)
class TangentLine:
    line: BoundaryGeodesic
    t: float = 0.0

    def flow(self, s: float) -> "TangentLine":
        return TangentLine(self.line, self.t + s)

    def point(self) -> PointH:
        return point_at(self)

    def reversed(self) -> "TangentLine":
        return TangentLine(self.line.reversed(), -self.t)


@dataclass(frozen=True)
class TangentVector:
    base: PointH
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % (2.0 * math.pi))


@dataclass(frozen=True)
class Hyperbolic:
    axis: BoundaryGeodesic  # repelling -> attracting
    length: float


@dataclass(frozen=True)
class Parabolic:
    fixed: float


@dataclass(frozen=True)
class Elliptic:
    pass


# --------------------------------------------------------------------------
# operations


def mobius_apply(m: MobiusMap, z: PointH) -> PointH:
    re, im = mobius_point(m.entries, z.re, z.im)
    return PointH(re, im)


def _multiplier_at(m: MobiusMap, z: float) -> float:
    a, b, c, d = m.entries
    if z == INF:
        return abs(d / a) if c == 0.0 else INF
    return 1.0 / (c * z + d) ** 2


def classify_and_axis(m: MobiusMap) -> Union[Hyperbolic, Parabolic, Elliptic]:
    if m.is_identity(1e-12):
        raise IdentityMap("identity has no axis")
    a, b, c, d = m.entries
    tr = abs(a + d)
    if abs(tr - 2.0) <= PARABOLIC_TOL:
        if c == 0.0:
            return Parabolic(INF)
        return Parabolic((a - d) / (2.0 * c))
    if tr < 2.0:
        return Elliptic()
    length = 2.0 * math.acosh(tr / 2.0)
    if c == 0.0:
        fixed = [INF, b / (d - a)]
    else:
        disc = math.sqrt((a + d) ** 2 - 4.0)
        fixed = [(a - d + disc) / (2.0 * c), (a - d - disc) / (2.0 * c)]
    # attracting fixed point has multiplier < 1
    if _multiplier_at(m, fixed[0]) < _multiplier_at(m, fixed[1]):
        fixed.reverse()
    return Hyperbolic(BoundaryGeodesic(fixed[0], fixed[1]), length)


def line_from_vector(v: TangentVector) -> TangentLine:
    px, py = v.base.re, v.base.im
    ca, sa = math.cos(v.angle), math.sin(v.angle)
    if abs(ca) < 1e-15:
        line = BoundaryGeodesic(px, INF) if sa > 0 else BoundaryGeodesic(INF, px)
    else:
        c = px + py * sa / ca
        rho = math.hypot(px - c, py)
        line = BoundaryGeodesic(c - rho, c + rho) if ca > 0 else BoundaryGeodesic(c + rho, c - rho)
    return TangentLine(line, param_on(line.x, line.y, px, py))


def vector_from_line(l: TangentLine) -> TangentVector:
    x, y = l.line.x, l.line.y
    re, im = point_on(x, y, l.t)
    if y == INF:
        angle = math.pi / 2.0
    elif x == INF:
        angle = 3.0 * math.pi / 2.0
    else:
        c = (x + y) / 2.0
        dz = complex(re - c, im)
        tangent = dz * (-1j if y > x else 1j)
        angle = math.atan2(tangent.imag, tangent.real)
    return TangentVector(PointH(re, im), angle)


def point_at(l: TangentLine) -> PointH:
    re, im = point_on(l.line.x, l.line.y, l.t)
    return PointH(re, im)


def param_at_point(l: BoundaryGeodesic, p: PointH, tol: float = GEOM_TOL) -> float:
    w = l.frame().inverse()(p)
    if axis_distance_from(w.re, w.im) > tol:
        raise OffGeodesic(f"{p} is not on {l}")
    return param_on(l.x, l.y, p.re, p.im)


def hyp_dist(p: PointH, q: PointH) -> float:
    chord = math.hypot(p.re - q.re, p.im - q.im)
    return 2.0 * math.asinh(chord / (2.0 * math.sqrt(p.im * q.im)))


def dist_to_imaginary_axis(p: PointH) -> float:
    return axis_distance_from(p.re, p.im)


def depth_to_axis(l: BoundaryGeodesic) -> float:
    return axis_depth(l.x, l.y)


def intersect(l1: BoundaryGeodesic, l2: BoundaryGeodesic) -> Optional[PointH]:
    hit = crossing_point(l1.x, l1.y, l2.x, l2.y)
    return None if hit is None else PointH(*hit)


def geodesic_through(p: PointH, q: PointH) -> BoundaryGeodesic:
    """Geodesic oriented from ``p`` towards ``q``."""
    if abs(p.re - q.re) <= 1e-15 * max(1.0, abs(p.re)):
        return BoundaryGeodesic(p.re, INF) if q.im > p.im else BoundaryGeodesic(INF, p.re)
    # centre on the real axis equidistant from p and q
    c = (abs(q.z) ** 2 - abs(p.z) ** 2) / (2.0 * (q.re - p.re))
    rho = abs(p.z - c)
    if q.re > p.re:
        return BoundaryGeodesic(c - rho, c + rho)
    return BoundaryGeodesic(c + rho, c - rho)


def normalizer_for_axis(axis: BoundaryGeodesic) -> MobiusMap:
    """A map sending ``axis`` to the imaginary axis, backward end to 0."""
    p, q = axis.x, axis.y
    if q == INF:
        return MobiusMap(1.0, -p, 0.0, 1.0)
    if p == INF:
        return MobiusMap(0.0, -1.0, 1.0, -q)
    s = 1.0 if p > q else -1.0
    return MobiusMap(s, -s * p, 1.0, -q)
