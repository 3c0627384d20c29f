"""Exception types shared across the package."""


class FlareBenchError(Exception):
    """Base class for all flarebench errors."""


class ParameterError(FlareBenchError, ValueError):
    """A scalar or configuration value is outside its documented domain."""


class ShapeError(FlareBenchError, ValueError):
    """Operands have incompatible dimensions."""


class EmptyRegionError(FlareBenchError, ValueError):
    """A masked reduction was requested over an empty region."""


class ManifestError(FlareBenchError, ValueError):
    """A manifest file is malformed or inconsistent."""
