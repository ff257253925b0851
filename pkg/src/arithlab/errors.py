"""Exception types shared across the package."""


class CapacityError(ValueError):
    """An input exceeds the exhaustive/exact capacity guard of an operation."""


class DimensionError(ValueError):
    """Matrix or grid dimensions are incompatible with the operation."""
