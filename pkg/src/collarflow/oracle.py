"""Quadrature checks of the Liouville measure of thickened cross-sections.

Everything is done in endpoint coordinates where the invariant measure is
(x - y)^-2 dx dy dt / (pi * area).  The t-integral over a section of
thickness epsilon is just epsilon, the y-integral is done analytically and
the remaining x-integral is evaluated with adaptive quadrature in u = log x.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import expit

from .collar import CollarSpec
from .constants import BRANCH_TOL, QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT
from .errors import BranchBoundaryDegenerate, NonPositiveLength, QuadratureFailure


class Branch(str, enum.Enum):
    ZETA_A_SMALL = "ZetaASmall"  # zeta * a < (1 + b) / a
    ZETA_A_LARGE = "ZetaALarge"


@dataclass(frozen=True)
class MeasureConstants:
    area_s: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.area_s > 0.0:
            raise ValueError(f"area must be positive, got {self.area_s!r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")

    @property
    def normalization(self) -> float:
        return 1.0 / (math.pi * self.area_s)

    @property
    def scale(self) -> float:
        return self.epsilon * self.normalization


@dataclass(frozen=True)
class Piece:
    name: str
    lo: float
    hi: float
    numeric: float
    closed_form: float
    rel_error: float


@dataclass(frozen=True)
class SectionMeasureReport:
    numeric: float
    closed_form: float
    rel_error: float
    pieces: Tuple[Piece, ...] = ()
    branch: Optional[Branch] = None
    # closed forms exactly as usually printed, for the ZetaASmall split only
    printed_pieces: Tuple[Tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["branch"] = self.branch.value if self.branch else None
        d["pieces"] = [asdict(p) for p in self.pieces]
        d["printed_pieces"] = [{"name": n, "closed_form": v} for n, v in self.printed_pieces]
        return d


def _rel(numeric: float, exact: float) -> float:
    if exact == 0.0:
        return abs(numeric)
    return abs(numeric - exact) / abs(exact)


def _quad_log(f: Callable[[float], float], x_lo: float, x_hi: float) -> float:
    """Integrate f(x) dx over (x_lo, x_hi) using u = log x."""

    def g(u):
        x = math.exp(u)
        return f(x) * x

    return _quad_u(g, math.log(x_lo), math.log(x_hi))


def _quad_u(g: Callable[[float], float], u_lo: float, u_hi: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(g, u_lo, u_hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from None
    if not math.isfinite(value) or err > max(1e-10, 1e-9 * abs(value)):
        raise QuadratureFailure(f"quadrature error estimate {err!r} too large for value {value!r}")
    return value


# --------------------------------------------------------------------------
# thickened geodesic section


def thick_section_measure(length: float, consts: MeasureConstants) -> SectionMeasureReport:
    """Measure of the vectors within flow time epsilon after crossing one
    period of the imaginary axis (from i to zeta i)."""
    if not length > 0.0:
        raise NonPositiveLength(f"geodesic length must be positive, got {length!r}")
    # y from -zeta^2/x to -1/x gives x/(x^2+1) - x/(x^2+zeta^2); times dx = x du
    def g(u):
        return expit(2.0 * u) - expit(2.0 * (u - length))

    numeric = consts.scale * _quad_u(g, -math.inf, math.inf)
    exact = consts.scale * length
    return SectionMeasureReport(numeric, exact, _rel(numeric, exact))


# --------------------------------------------------------------------------
# collar boundary section


def _branch(spec: CollarSpec) -> Branch:
    a, b, zeta = spec.a, spec.b, spec.zeta
    left, right = zeta * a, (1.0 + b) / a
    if abs(left - right) <= BRANCH_TOL * right:
        raise BranchBoundaryDegenerate(f"zeta*a = (1+b)/a = {right!r}; perturb r")
    return Branch.ZETA_A_SMALL if left < right else Branch.ZETA_A_LARGE


def _closed_pieces(spec: CollarSpec, printed: bool = False) -> Dict[str, float]:
    """Logarithmic closed forms of the three x-ranges (without epsilon/pi/area).

    ``printed`` reproduces the frequently quoted M2 with a full log(1 - a^2);
    the default is the form that actually equals the integral.
    """
    a, b, zeta = spec.a, spec.b, spec.zeta
    L = spec.length
    k = (1.0 + b) / (2.0 * b)
    q1 = (1.0 + b) ** 2 / (a * a) - 2.0 * (1.0 + b) + 1.0
    qz = (1.0 + b) ** 2 / (a * a) - 2.0 * (1.0 + b) * zeta + zeta * zeta
    pz = a * a * zeta * zeta - 2.0 * a * a * zeta + 1.0
    l1a = math.log1p(-a * a)
    if _branch(spec) is Branch.ZETA_A_SMALL:
        m2_coeff = 1.0 if printed else 0.5
        return {
            "M1": k * L - L - 0.5 * math.log(q1) + 0.5 * math.log(qz),
            "M2": 0.5 * math.log(q1) - 0.5 * math.log(pz) + L + m2_coeff * l1a - 0.5 * math.log(qz),
            "M3": 0.5 * math.log(pz) - 0.5 * l1a,
        }
    return {
        "M1": k * math.log((1.0 + b) / (a * a)) - 0.5 * math.log(q1) + 0.5 * l1a,
        "M2": k * math.log(zeta * a * a / (1.0 + b)),
        "M3": 0.5 * math.log(q1) - 0.5 * l1a,
    }


def _integrands(spec: CollarSpec):
    a, b, zeta = spec.a, spec.b, spec.zeta

    # 1/(x - y) at the four kinds of y-limit
    def tangent(x):
        return (1.0 + b) / (2.0 * b * x)

    def upper_end(x):
        return (x - a * zeta) / (x * x - 2.0 * a * zeta * x + zeta * zeta)

    def lower_end(x):
        return (x - a) / (x * x - 2.0 * a * x + 1.0)

    return tangent, upper_end, lower_end


def collar_section_measures(spec: CollarSpec, consts: MeasureConstants) -> SectionMeasureReport:
    """Measure of vectors whose first crossing of the A boundary of the
    collar lies in one period s = {t p : 1 <= t <= zeta}, split by the range
    of the backward endpoint x."""
    a, b, zeta = spec.a, spec.b, spec.zeta
    branch = _branch(spec)
    tangent, upper_end, lower_end = _integrands(spec)
    x_tan_lo, x_tan_hi = (1.0 + b) / a, zeta * (1.0 + b) / a
    if branch is Branch.ZETA_A_SMALL:
        ranges = {
            "M1": (x_tan_lo, x_tan_hi, lambda x: tangent(x) - upper_end(x)),
            "M2": (zeta * a, x_tan_lo, lambda x: lower_end(x) - upper_end(x)),
            "M3": (a, zeta * a, lower_end),
        }
    else:
        ranges = {
            "M1": (zeta * a, x_tan_hi, lambda x: tangent(x) - upper_end(x)),
            "M2": (x_tan_lo, zeta * a, tangent),
            "M3": (a, x_tan_lo, lower_end),
        }
    closed = _closed_pieces(spec)
    pieces = []
    for name, (lo, hi, f) in ranges.items():
        num = consts.scale * _quad_log(f, lo, hi)
        cf = consts.scale * closed[name]
        pieces.append(Piece(name, lo, hi, num, cf, _rel(num, cf)))
    numeric = math.fsum(p.numeric for p in pieces)
    exact = consts.scale * (1.0 + b) * spec.length / (2.0 * b)
    printed = ()
    if branch is Branch.ZETA_A_SMALL:
        printed = tuple((n, consts.scale * v) for n, v in _closed_pieces(spec, printed=True).items())
    return SectionMeasureReport(numeric, exact, _rel(numeric, exact), tuple(pieces), branch, printed)


def core_crossing_measure(spec: CollarSpec, consts: MeasureConstants) -> float:
    """Numeric measure of first A-boundary crossings in s whose geodesic goes
    on to cross the core (forward endpoint y < 0)."""
    a, zeta = spec.a, spec.zeta
    tangent, upper_end, lower_end = _integrands(spec)
    # along y in (-inf, 0) the crossing radius runs from x/a down to x*a;
    # s in [1, zeta] cuts out y between the zeta-limit and the 1-limit
    breaks = sorted({a, 1.0 / a, zeta * a, zeta / a})

    def f(x):
        hi = 1.0 / x if x * a >= 1.0 else lower_end(x)
        lo = 0.0 if x / a <= zeta else upper_end(x)
        return hi - lo

    total = 0.0
    for lo, hi in zip(breaks, breaks[1:]):
        total += _quad_log(f, lo, hi)
    return consts.scale * total


@dataclass(frozen=True)
class DerivedMeasures:
    J0: float
    J1: float
    J3: float
    J0_numeric: float
    J1_numeric: float
    J3_numeric: float

    def identity_residual(self) -> float:
        return self.J0 - (2.0 * self.J1 + self.J3)


def derived_section_measures(spec: CollarSpec, consts: MeasureConstants) -> DerivedMeasures:
    """All A-boundary entries (J0), entries returning to A on the near side
    (J1, equal in measure to the far side J2) and core-crossing entries (J3)."""
    L, cr = spec.length, math.cosh(spec.r)
    j3 = consts.scale * L
    j1 = consts.scale * (cr - 1.0) * L / 2.0
    j0 = consts.scale * L * cr
    report = collar_section_measures(spec, consts)
    j3n = core_crossing_measure(spec, consts)
    j1n = report.numeric - j3n
    return DerivedMeasures(j0, j1, j3, 2.0 * j1n + j3n, j1n, j3n)


# --------------------------------------------------------------------------
# reflection symmetry between near and far returns


def _first_crossing(spec: CollarSpec, x: float, y: float) -> Optional[float]:
    """Radius of the first crossing of the A ray by x -> y, or None."""
    a, b = spec.a, spec.b
    c = 0.5 * (x + y)
    p = c * a
    disc = p * p - x * y
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    roots = [s for s in (p - sq, p + sq) if s > 0.0]
    if not roots:
        return None
    if len(roots) == 1:
        return roots[0]
    from .hypcore import param_on

    ts = [param_on(x, y, s * a, s * b) for s in roots]
    return roots[0] if ts[0] < ts[1] else roots[1]


def reflect(spec: CollarSpec, x: float, y: float) -> Tuple[float, float]:
    """Endpoints of the image of x -> y under z -> zeta / conj(z)."""
    return spec.zeta / x, spec.zeta / y


def symmetry_check(spec: CollarSpec, n: int = 10_000, seed: int = 0, tol: float = 1e-9) -> Tuple[bool, int]:
    """Sample near-return entries (0 < y < x) first crossing s and check
    their reflections are far-return entries (0 < x < y) first crossing s at
    the reflected radius.  Returns (all passed, number of failures)."""
    rng = np.random.default_rng(seed)
    zeta = spec.zeta
    x_hi = zeta * (1.0 + spec.b) / spec.a
    failures = 0
    found = 0
    while found < n:
        xs = np.exp(rng.uniform(math.log(spec.a), math.log(x_hi), 4096))
        # lines with y/x above the tangent ratio stay clear of the collar
        ys = xs * rng.uniform(0.0, (1.0 - spec.b) / (1.0 + spec.b), 4096)
        for x, y in zip(xs.tolist(), ys.tolist()):
            if found >= n:
                break
            if not 0.0 < y < x:
                continue
            s = _first_crossing(spec, x, y)
            if s is None or not 1.0 <= s <= zeta:
                continue
            found += 1
            xr, yr = reflect(spec, x, y)
            sr = _first_crossing(spec, xr, yr)
            ok = 0.0 < xr < yr and sr is not None and abs(sr - zeta / s) <= tol * zeta
            ok = ok and 1.0 - tol <= sr <= zeta * (1.0 + tol)
            if not ok:
                failures += 1
    return failures == 0, failures


def verify_report(length: float, r: float, consts: MeasureConstants, tol: float = 1e-8) -> dict:
    """Everything the measure checks produce, as a JSON-ready dict."""
    from .collar import collar_from_width

    spec = collar_from_width(length, r)
    thick = thick_section_measure(length, consts)
    collar = collar_section_measures(spec, consts)
    derived = derived_section_measures(spec, consts)
    sym_ok, sym_fail = symmetry_check(spec, n=2000)
    checks = {
        "thick_section": thick.rel_error <= tol,
        "collar_sum": collar.rel_error <= tol,
        "collar_pieces": all(p.rel_error <= tol for p in collar.pieces),
        "derived_identity": abs(derived.identity_residual()) <= 1e-15 * max(1.0, derived.J0),
        "derived_numeric": all(
            _rel(n, c) <= tol
            for n, c in ((derived.J0_numeric, derived.J0), (derived.J1_numeric, derived.J1), (derived.J3_numeric, derived.J3))
        ),
        "symmetry": sym_ok,
    }
    return {
        "length": length,
        "r": r,
        "area_s": consts.area_s,
        "epsilon": consts.epsilon,
        "tolerance": tol,
        "thick_section": thick.to_dict(),
        "collar_section": collar.to_dict(),
        "derived": asdict(derived),
        "symmetry_failures": sym_fail,
        "checks": checks,
        "ok": all(checks.values()),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
