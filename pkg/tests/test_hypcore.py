import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from collarflow.errors import IdentityMap, OffGeodesic
from collarflow.hypcore import (
    INF,
    BoundaryGeodesic,
    Elliptic,
    Hyperbolic,
    MobiusMap,
    Parabolic,
    PointH,
    TangentLine,
    TangentVector,
    classify_and_axis,
    depth_to_axis,
    dist_to_imaginary_axis,
    hyp_dist,
    interleaved,
    intersect,
    line_from_vector,
    mobius_apply,
    normalizer_for_axis,
    param_at_point,
    point_at,
    vector_from_line,
)

pytestmark = pytest.mark.properties

coord = st.floats(-5.0, 5.0, allow_nan=False)
height = st.floats(0.05, 5.0, allow_nan=False)
points = st.builds(PointH, coord, height)


@st.composite
def mobius_maps(draw):
    a, b, c = (draw(st.floats(-3.0, 3.0)) for _ in range(3))
    assume(abs(a) > 0.1)
    d = (1.0 + b * c) / a
    assume(abs(d) < 20.0)
    return MobiusMap(a, b, c, d)


@st.composite
def finite_lines(draw):
    x = draw(coord)
    y = draw(coord)
    assume(abs(x - y) > 0.05)
    return BoundaryGeodesic(x, y)


# -- MobiusMap ---------------------------------------------------------------


def test_determinant_renormalized():
    m = MobiusMap(2.0, 0.0, 0.0, 2.0)
    assert m.det == pytest.approx(1.0, abs=1e-12)
    m = MobiusMap(3.0, 1.0, 2.0, 4.0)
    assert m.det == pytest.approx(1.0, abs=1e-12)


def test_projective_sign_equal():
    m = MobiusMap(1.0, 1.0, 1.0, 2.0)
    n = MobiusMap(-1.0, -1.0, -1.0, -2.0)
    assert m == n
    assert m.isclose(n)


def test_identity_and_translation():
    assert mobius_apply(MobiusMap.identity(), PointH(0.0, 1.0)) == PointH(0.0, 1.0)
    p = mobius_apply(MobiusMap(1.0, 1.0, 0.0, 1.0), PointH(0.0, 1.0))
    assert (p.re, p.im) == pytest.approx((1.0, 1.0))


def test_apply_matches_formula():
    m = MobiusMap(1.0, 1.0, 1.0, 2.0)
    z = 1j
    p = mobius_apply(m, PointH(0.0, 1.0))
    expected = (z + 1) / (z + 2)
    assert p.z == pytest.approx(expected, abs=1e-15)


def test_point_rejects_lower_half():
    with pytest.raises(ValueError):
        PointH(0.0, 0.0)
    with pytest.raises(ValueError):
        PointH(1.0, -1.0)


@settings(max_examples=200, deadline=None)
@given(mobius_maps(), points, points)
def test_isometry_invariance(m, p, q):
    d = hyp_dist(p, q)
    assert hyp_dist(mobius_apply(m, p), mobius_apply(m, q)) == pytest.approx(d, rel=1e-9, abs=1e-9)


def test_negated_map_acts_identically():
    rng = np.random.default_rng(5)
    m = MobiusMap(1.3, 0.7, -0.4, 0.55)
    a, b, c, d = m.entries
    for _ in range(1000):
        z = complex(rng.uniform(-3, 3), rng.uniform(0.1, 3))
        w1 = (a * z + b) / (c * z + d)
        w2 = (-a * z - b) / (-c * z - d)
        assert w1 == pytest.approx(w2, rel=1e-14)
        assert m(PointH.from_complex(z)).z == pytest.approx(w1, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(mobius_maps(), mobius_maps())
def test_composition_is_action(m, n):
    p = PointH(0.3, 1.7)
    assert (m @ n)(p).z == pytest.approx(m(n(p)).z, rel=1e-9, abs=1e-9)
    assert (m @ m.inverse()).is_identity(1e-9)


# -- classification --------------------------------------------------------------


def test_classify_diagonal():
    kind = classify_and_axis(MobiusMap.diagonal(1.0))
    assert isinstance(kind, Hyperbolic)
    assert kind.length == pytest.approx(1.0, rel=1e-12)
    assert (kind.axis.x, kind.axis.y) == (0.0, INF)


def test_classify_parabolic_and_elliptic():
    kind = classify_and_axis(MobiusMap(1.0, 1.0, 0.0, 1.0))
    assert isinstance(kind, Parabolic) and kind.fixed == INF
    assert isinstance(classify_and_axis(MobiusMap(0.0, -1.0, 1.0, 0.0)), Elliptic)
    with pytest.raises(IdentityMap):
        classify_and_axis(MobiusMap(-1.0, 0.0, 0.0, -1.0))


def test_classify_trace_three():
    m = MobiusMap(1.0, 1.0, 1.0, 2.0)
    kind = classify_and_axis(m)
    assert kind.length == pytest.approx(2.0 * math.acosh(1.5), rel=1e-12)
    assert kind.length == pytest.approx(1.9248473, abs=1e-7)
    roots = {(-1 - math.sqrt(5)) / 2, (-1 + math.sqrt(5)) / 2}
    assert sorted((kind.axis.x, kind.axis.y)) == pytest.approx(sorted(roots), rel=1e-12)
    for u in (kind.axis.x, kind.axis.y):
        assert m(u) == pytest.approx(u, rel=1e-12)
    # iterates of any point run to the attracting end
    z = PointH(0.0, 1.0)
    for _ in range(30):
        z = m(z)
    assert z.re == pytest.approx(kind.axis.y, abs=1e-9)


# -- tangent coordinates -------------------------------------------------------------


def test_line_from_vector_examples():
    tl = line_from_vector(TangentVector(PointH(0.0, 1.0), math.pi / 2))
    assert (tl.line.x, tl.line.y) == (0.0, INF) and tl.t == pytest.approx(0.0, abs=1e-15)
    tl = line_from_vector(TangentVector(PointH(0.0, 1.0), 0.0))
    assert (tl.line.x, tl.line.y) == pytest.approx((-1.0, 1.0)) and tl.t == pytest.approx(0.0, abs=1e-15)
    tl = line_from_vector(TangentVector(PointH(1.0, 1.0), math.pi / 2))
    assert (tl.line.x, tl.line.y) == (1.0, INF)
    back = vector_from_line(tl)
    assert back.base.re == pytest.approx(1.0) and back.base.im == pytest.approx(1.0)
    assert back.angle == pytest.approx(math.pi / 2)


@settings(max_examples=300, deadline=None)
@given(points, st.floats(0.0, 2 * math.pi, exclude_max=True))
def test_vector_line_round_trip(p, angle):
    v = TangentVector(p, angle)
    back = vector_from_line(line_from_vector(v))
    assert back.base.re == pytest.approx(p.re, abs=1e-9)
    assert back.base.im == pytest.approx(p.im, rel=1e-9)
    diff = (back.angle - v.angle + math.pi) % (2 * math.pi) - math.pi
    assert abs(diff) < 1e-9


def test_point_at_examples():
    assert point_at(TangentLine(BoundaryGeodesic(-1.0, 1.0), 0.0)).z == pytest.approx(1j)
    assert point_at(TangentLine(BoundaryGeodesic(0.0, INF), 0.7)).z == pytest.approx(1j * math.exp(0.7))
    p = param_at_point(BoundaryGeodesic(0.0, INF), PointH(0.0, math.e))
    assert p == pytest.approx(1.0)
    assert param_at_point(BoundaryGeodesic(-1.0, 1.0), PointH(0.0, 1.0)) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(finite_lines(), st.floats(-4.0, 4.0), st.floats(-3.0, 3.0))
def test_unit_speed_and_param_inverse(line, t, s):
    p = point_at(TangentLine(line, t))
    q = point_at(TangentLine(line, t + s))
    assert hyp_dist(p, q) == pytest.approx(abs(s), abs=1e-9)
    assert TangentLine(line, t).flow(s).t == t + s
    assert param_at_point(line, p) == pytest.approx(t, abs=1e-9)


def test_param_at_point_off_line():
    with pytest.raises(OffGeodesic):
        param_at_point(BoundaryGeodesic(-1.0, 1.0), PointH(0.0, 2.0))


# -- distances -----------------------------------------------------------------


def test_hyp_dist_examples():
    assert hyp_dist(PointH(0.0, 1.0), PointH(0.0, 1.0)) == 0.0
    assert hyp_dist(PointH(0.0, 1.0), PointH(0.0, math.e)) == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(points, points, points)
def test_metric_axioms(p, q, w):
    assert hyp_dist(p, q) == pytest.approx(hyp_dist(q, p))
    assert hyp_dist(p, w) <= hyp_dist(p, q) + hyp_dist(q, w) + 1e-9


def test_dist_to_axis_examples():
    assert dist_to_imaginary_axis(PointH(0.0, 3.0)) == 0.0
    # polar angle pi/4 from the axis
    assert dist_to_imaginary_axis(PointH(1.0, 1.0)) == pytest.approx(math.log(math.sqrt(2) + 1), abs=1e-12)
    assert dist_to_imaginary_axis(PointH(1.0, 1.0)) == pytest.approx(0.8814, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(points)
def test_dist_to_axis_matches_minimization(p):
    res = minimize_scalar(lambda u: hyp_dist(p, PointH(0.0, math.exp(u))), bracket=(-1.0, 1.0), tol=1e-12)
    assert dist_to_imaginary_axis(p) == pytest.approx(res.fun, abs=1e-7)
    phi = math.asin(abs(p.re) / abs(p.z))
    assert math.sinh(dist_to_imaginary_axis(p)) == pytest.approx(math.tan(phi), rel=1e-9)


def test_depth_examples():
    assert depth_to_axis(BoundaryGeodesic(-1.0, 1.0)) == 0.0
    assert depth_to_axis(BoundaryGeodesic(0.0, 2.0)) == 0.0
    for b in (0.9, 0.5, 0.1):
        a = math.sqrt(1 - b * b)
        for t in (0.5, 1.0, 2.0):
            x, y = t * (1 + b) / a, t * (1 - b) / a
            assert x * y == pytest.approx(t * t, rel=1e-14)
            assert depth_to_axis(BoundaryGeodesic(x, y)) == pytest.approx(math.acosh(1 / b), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.booleans())
def test_depth_matches_minimization(x, y, negative):
    assume(abs(x - y) > 0.05)
    if negative:
        x, y = -x, -y
    line = BoundaryGeodesic(x, y)
    res = minimize_scalar(
        lambda t: dist_to_imaginary_axis(point_at(TangentLine(line, t))), bounds=(-30, 30), method="bounded",
        options={"xatol": 1e-12},
    )
    d = depth_to_axis(line)
    assert d == pytest.approx(res.fun, abs=1e-9)
    assert math.cosh(d) == pytest.approx(abs(x + y) / abs(x - y), rel=1e-12)


# -- intersections --------------------------------------------------------------


def test_intersect_examples():
    assert intersect(BoundaryGeodesic(-1.0, 1.0), BoundaryGeodesic(0.0, INF)).z == pytest.approx(1j)
    assert intersect(BoundaryGeodesic(-1.0, 1.0), BoundaryGeodesic(2.0, 3.0)) is None
    # sharing an ideal endpoint is not a crossing
    assert intersect(BoundaryGeodesic(-1.0, 1.0), BoundaryGeodesic(1.0, INF)) is None


@settings(max_examples=300, deadline=None)
@given(finite_lines(), finite_lines())
def test_intersection_iff_interleaved(l1, l2):
    inside = [min(l1.x, l1.y) < u < max(l1.x, l1.y) for u in (l2.x, l2.y)]
    assume(all(abs(u - v) > 1e-6 for u in (l1.x, l1.y) for v in (l2.x, l2.y)))
    p = intersect(l1, l2)
    assert (p is not None) == (sum(inside) == 1) == interleaved(l1.x, l1.y, l2.x, l2.y)
    if p is not None:
        for l in (l1, l2):
            residual = abs(p.z - l.center) - l.radius
            assert abs(residual) < 1e-9


def test_normalizer_for_axis():
    axis = BoundaryGeodesic(-1.6, 0.6)
    n = normalizer_for_axis(axis)
    assert n(axis.x) == pytest.approx(0.0, abs=1e-12)
    assert abs(n(axis.y)) > 1e12
    # walking over the top from -1.6 to 0.6, the left is outside the circle
    assert n(PointH(-0.5, 2.0)).re < 0
    assert n(PointH(-0.5, 0.5)).re > 0
