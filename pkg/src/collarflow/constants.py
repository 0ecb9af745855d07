"""Numerical tolerances and budgets used throughout the package.

Every tolerance lives here so that the geometric predicates, the tracer and
the quadrature oracle agree on what "close enough" means.
"""

#: Renormalisation check for unit-determinant maps.
DET_TOL = 1e-12

#: Absolute tolerance for geometric predicates in boundary coordinates
#: (on-geodesic tests, interleaving, round trips).
GEOM_TOL = 1e-9

#: Two collar/side events closer than this (in flow time) are treated as a
#: simultaneous hit and the trajectory is resampled.
EVENT_TOL = 1e-9

#: Relative tolerance for declaring an endpoint degenerate (y == 0 or y == x).
DEGENERATE_TOL = 1e-12

#: Trace |tr| within this of 2 is parabolic.
PARABOLIC_TOL = 1e-9

#: Iteration cap for point reduction into the fundamental polygon.
REDUCTION_MAX_STEPS = 10**6

#: Relative gap |zeta*a - (1+b)/a| below which the collar-measure branch is
#: considered degenerate.
BRANCH_TOL = 1e-12

#: Quadrature budget: maximum subintervals and absolute tolerance on the
#: transformed integrand.
QUAD_LIMIT = 1000
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12

#: Sampling truncation of the fundamental polygon (cusp at infinity and
#: near finite ideal vertices).
SAMPLE_Y_MAX = 10.0
SAMPLE_Y_MIN = 1e-3

#: Extra slack (hyperbolic distance) when deciding which collar lifts can
#: meet the fundamental polygon.
LIFT_MARGIN = 1e-6
