"""Exception types shared across the package."""


class TropfwError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(TropfwError, ValueError):
    """Vectors of unequal length were combined."""


class DegeneratePoint(TropfwError, ValueError):
    """The point is constant on every circuit; boundary distance is undefined."""


class NotInFan(TropfwError, ValueError):
    """The point does not satisfy the circuit argmax condition of the fan."""


class CapacityExceeded(TropfwError, ValueError):
    """An exhaustive routine was asked to run beyond its guarded size."""


class DegeneratePolytope(TropfwError, ValueError):
    """Some coordinate is minus infinity in every vertex of the polytope."""


class NewickError(TropfwError, ValueError):
    """Malformed Newick input. Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
