"""Exception types shared across the package."""


class SpecnetError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SpecnetError, ValueError):
    """Tensor shapes are inconsistent with the requested operation."""


class DatasetError(SpecnetError, ValueError):
    """Malformed or inconsistent dataset content (carries row/band context)."""


class CheckpointError(SpecnetError, ValueError):
    """Checkpoint file is missing, corrupt, or incompatible."""


class ConfigError(SpecnetError, ValueError):
    """Run configuration is invalid (unknown key, bad type, bad value)."""
