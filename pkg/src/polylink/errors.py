"""Exception types shared across the package."""


class PolytopeConstructionError(ValueError):
    """Raised when a polytope cannot be built from the given input."""


class UnsupportedDimensionError(PolytopeConstructionError):
    """Raised for explicit vertex input outside d in {2, 3}."""


class SamplingEfficiencyError(RuntimeError):
    """Raised when rejection sampling exceeds its proposal budget."""


class SizeGuardError(ValueError):
    """Raised when a brute-force oracle is asked to exceed its size limit."""


class ConfigurationError(ValueError):
    """Raised for invalid experiment or density configuration."""
