"""Exception types shared across the package."""


class CapacityError(Exception):
    """Requested system size exceeds what dense storage can handle."""


class SymmetryError(ValueError):
    """Operation requires a reflection-symmetric model instance."""


class ConfigError(ValueError):
    """Experiment configuration is malformed; message carries the field path."""


class EmptyStatisticsError(ValueError):
    """All spacing-ratio pairs were skipped as degenerate."""
