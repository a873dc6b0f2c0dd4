"""Exception taxonomy shared across the toolkit."""


class SymextiaError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(SymextiaError, ValueError):
    """A caller-supplied parameter is malformed or out of range."""


class CapacityError(SymextiaError, OverflowError):
    """A requested enumeration or width exceeds what can be materialized."""


class DegenerateRealizationError(SymextiaError, RuntimeError):
    """A random draw produced a numerically unusable realization."""


class SimulationError(SymextiaError, RuntimeError):
    """A simulation could not make progress (for example persistent resampling)."""
