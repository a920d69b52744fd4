"""Exception hierarchy shared by all corrint modules."""


class CorrintError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CorrintError):
    """Invalid physical configuration or unparsable config text."""


class GridError(CorrintError):
    """Grid specification violates a resolution, memory, or stability bound."""


class NumericsError(CorrintError):
    """A numerical procedure failed to reach its requested accuracy."""


class AnalysisError(CorrintError):
    """A fringe metric could not be computed from the supplied field."""
