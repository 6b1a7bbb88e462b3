"""Exception types raised by landau_kit."""


class LandauKitError(Exception):
    """Base class for all package errors."""


class InvalidParameter(LandauKitError, ValueError):
    pass


class DimensionMismatch(LandauKitError, ValueError):
    pass


class IndexOutOfRange(LandauKitError, IndexError):
    pass


class NotDisjoint(LandauKitError, ValueError):
    pass


class DegenerateExpansion(LandauKitError, ValueError):
    pass
