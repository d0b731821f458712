"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid array/scenario/estimation configuration."""


class VanishingGroupError(ConfigurationError):
    """A coherent group cancels itself out on a sparse array."""


class DimensionError(ValueError):
    """Operands have inconsistent shapes or sizes."""
