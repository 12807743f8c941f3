"""canopyvol exception definitions"""

from typing import Any


class CanopyVolError(Exception):
    """Base exception class for canopyvol"""

    def __init__(self, message: str, *, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.details = dict(details or {})


class InputValidationError(CanopyVolError):
    """Argument values or domain invariants violated"""

    pass


class ConfigError(InputValidationError):
    """Run configuration errors"""

    pass


class SidecarError(InputValidationError):
    """Acquisition sidecar missing fields or malformed"""

    pass


class DimensionMismatchError(InputValidationError):
    """Two rasters that must align have different shapes"""

    pass


class SceneError(InputValidationError):
    """Synthetic scene description cannot be rendered"""

    pass


class GeometryError(CanopyVolError):
    """Sun/shadow geometry undefined for the inputs"""

    pass


class RasterFormatError(CanopyVolError):
    """Image decodes but is not a valid raster of the expected kind"""

    pass


class RasterIOError(CanopyVolError):
    """Raster file cannot be read or written"""

    pass


class PlacementError(CanopyVolError):
    """Random tree placement infeasible"""

    pass
