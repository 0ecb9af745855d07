"""Geodesic flow on hyperbolic surfaces and excursions into collars of
simple closed geodesics."""

from .collar import CollarSpec, EntrySide, collar_from_area, collar_from_width, max_collar_width
from .flow import Event, EventLog, ExcursionRecord, FlowState, excursions, start_state, trace
from .hypcore import BoundaryGeodesic, MobiusMap, PointH, TangentLine, TangentVector
from .surface import SurfaceSpec, build_arc_table, load_surface, parse_surface, preset, reduce, target_from_word

__version__ = "0.1.0"
