"""Exception hierarchy shared by the library and the command-line tool."""


class FusionError(Exception):
    """Base class for all errors raised by stnlffm."""


class RasterFormatError(FusionError, ValueError):
    """A raster file or header is malformed (size mismatch, bad dtype, non-finite data)."""


class GeometryError(FusionError, ValueError):
    """Grids that must share geometry (width, height, bands) do not."""


class ConfigError(FusionError, ValueError):
    """A parameter is outside its allowed range."""


class NumericError(FusionError, ArithmeticError):
    """A computation produced an undefined result."""
