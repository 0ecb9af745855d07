"""Closed-form geometry of the r-collar around a simple closed geodesic.

After normalisation the geodesic lifts to the imaginary axis and the deck
translation is z -> zeta z with log(zeta) = length.  The collar boundary on
the A side lifts to the ray through p = a + i b with a = sin(phi),
b = cos(phi), phi being the angle between the ray and the axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple

from .constants import DEGENERATE_TOL
from .errors import DegenerateEndpoint, NonPositiveLength, VerticalLine, WidthExceedsEmbedding


class EntrySide(enum.Enum):
    """How a geodesic entering the collar at the A boundary leaves it.

    With the backward endpoint ``x > 0`` in normalised coordinates:
    RETURNS_NEAR is 0 < y < x, RETURNS_FAR is 0 < x < y and CROSSES_CORE is
    y < 0 < x.
    """

    RETURNS_NEAR = "R1"
    RETURNS_FAR = "R2"
    CROSSES_CORE = "R3"


def max_collar_width(length: float) -> float:
    """Largest embedded collar half-width, log coth(length / 4)."""
    if not length > 0.0:
        raise NonPositiveLength(f"geodesic length must be positive, got {length!r}")
    return math.log(1.0 / math.tanh(length / 4.0))


@dataclass(frozen=True)
class CollarSpec:
    length: float
    r: float
    phi: float
    a: float
    b: float
    zeta: float
    area: float

    @property
    def max_width(self) -> float:
        return max_collar_width(self.length)

    @property
    def boundary_length(self) -> float:
        """Length of one boundary curve, length * cosh r."""
        return self.length * math.cosh(self.r)

    def radical_forms(self) -> Tuple[float, float]:
        """sqrt(l^2 + (area/2)^2) and that minus l."""
        root = math.hypot(self.length, self.area / 2.0)
        return root, root - self.length


def collar_from_width(length: float, r: float) -> CollarSpec:
    rmax = max_collar_width(length)
    if not 0.0 < r < rmax:
        raise WidthExceedsEmbedding(f"need 0 < r < {rmax!r} for length {length!r}, got r={r!r}")
    phi = math.atan(math.sinh(r))
    return CollarSpec(
        length=length,
        r=r,
        phi=phi,
        a=math.sin(phi),
        b=1.0 / math.cosh(r),
        zeta=math.exp(length),
        area=2.0 * length * math.sinh(r),
    )


def collar_from_area(length: float, area: float) -> CollarSpec:
    if not length > 0.0:
        raise NonPositiveLength(f"geodesic length must be positive, got {length!r}")
    if not area > 0.0:
        raise WidthExceedsEmbedding(f"collar area must be positive, got {area!r}")
    return collar_from_width(length, math.asinh(area / (2.0 * length)))


def crossing_y(x: float, t: float, spec: CollarSpec) -> float:
    """Forward endpoint of the geodesic from ``x`` through ``t * (a + i b)``."""
    a = spec.a
    den = x - a * t
    if abs(den) <= DEGENERATE_TOL * max(abs(x), 1.0):
        raise VerticalLine(f"geodesic from {x!r} through the ray point is vertical")
    return (a * x * t - t * t) / den


def tangent_endpoints(t: float, spec: CollarSpec) -> Tuple[float, float]:
    """Endpoints (x > y) of the geodesic tangent to the A ray at t * p."""
    a, b = spec.a, spec.b
    return t * (1.0 + b) / a, t * (1.0 - b) / a


def classify_entry(x: float, y: float) -> EntrySide:
    if not x > 0.0:
        raise ValueError(f"entry classification needs x > 0, got {x!r}")
    tol = DEGENERATE_TOL * x
    if abs(y) <= tol or abs(y - x) <= tol:
        raise DegenerateEndpoint(f"degenerate endpoint pair ({x!r}, {y!r})")
    if y < 0.0:
        return EntrySide.CROSSES_CORE
    return EntrySide.RETURNS_NEAR if y < x else EntrySide.RETURNS_FAR
