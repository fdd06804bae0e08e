"""Exception types shared across the package."""


class MmctError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MmctError, ValueError):
    """A configuration object or parameter set is invalid or inconsistent."""


class ValidationError(MmctError, ValueError):
    """An input value violates a documented precondition."""


class MappingError(MmctError, ValueError):
    """Block counts or dimensions do not match the mapper configuration."""


class CorruptionError(MmctError, ValueError):
    """A grid fails receiver-side consistency checks (tags or counts)."""


class FramingError(MmctError, ValueError):
    """A bit or symbol sequence does not frame evenly."""


class RankError(MmctError, ValueError):
    """More spatial layers requested than the channel supports."""
