"""Exception hierarchy shared across the toolkit."""


class TopoforgeError(Exception):
    """Base class for every error raised by this package."""


class SketchError(TopoforgeError):
    """A raster sketch could not be turned into a usable design problem."""


class NoMaterialError(SketchError):
    """The sketch contains no material-colored pixels."""


class NoLoadError(SketchError):
    """The sketch contains no load-colored pixels."""


class NoFixingError(SketchError):
    """The sketch contains no boundary-condition pixels."""


class AmbiguousPaletteError(SketchError):
    """Two palette entries have overlapping tolerance regions."""


class DimensionMismatchError(TopoforgeError):
    """Array shapes do not agree with the problem grid."""


class SingularSystemError(TopoforgeError):
    """The linear system could not be solved; the problem is under-constrained."""


class BisectionFailureError(TopoforgeError):
    """No Lagrange multiplier satisfies the volume constraint (degenerate sensitivities)."""


class BackendUnavailableError(TopoforgeError):
    """The remote generation backend could not be reached."""


class RemoteProtocolError(TopoforgeError):
    """The remote generation backend returned a malformed response."""
