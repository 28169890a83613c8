"""Exception hierarchy shared by every module."""


class G2LError(Exception):
    """Base class for all library errors."""


class FormatError(G2LError):
    """Malformed container or manifest bytes."""


class DataError(G2LError):
    """Well-formed input carrying invalid values (NaN, Inf)."""


class ConfigError(G2LError):
    """Invalid or incomplete compression configuration."""


class ShapeError(G2LError, ValueError):
    """Array dimensions do not agree."""


class RangeError(G2LError, ValueError):
    """A count or index is outside its admissible range."""


class AllocationError(G2LError):
    """A token budget cannot be met under the per-view cap."""


class IoError(G2LError, OSError):
    """Reading or writing a file failed."""
