"""Exception types raised by the geometry, surface and flow layers."""


class CollarFlowError(Exception):
    """Base class for all package errors."""


class IdentityMap(CollarFlowError):
    pass


class OffGeodesic(CollarFlowError):
    pass


class NonPositiveLength(CollarFlowError, ValueError):
    pass


class WidthExceedsEmbedding(CollarFlowError, ValueError):
    pass


class VerticalLine(CollarFlowError):
    pass


class DegenerateEndpoint(CollarFlowError):
    pass


class UnknownPreset(CollarFlowError, KeyError):
    pass


class NotHyperbolic(CollarFlowError):
    pass


class ReductionStall(CollarFlowError):
    pass


class DegenerateHit(CollarFlowError):
    """A trajectory passed (numerically) through a measure-zero configuration."""


class QuadratureFailure(CollarFlowError):
    pass


class BranchBoundaryDegenerate(CollarFlowError):
    pass


class EmptySample(CollarFlowError, ValueError):
    pass


class SurfaceFormatError(CollarFlowError, ValueError):
    """Invalid surface description; the message carries the offending line."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
