"""Shared exception types."""


class ConfigurationError(ValueError):
    """Invalid configuration: bad field values, class constraints, unknown kinds."""


class SimulationError(RuntimeError):
    """Runtime failure during a simulation (observer writes, corrupt inputs)."""
