"""Exception hierarchy shared by all modules."""


class MTMError(ValueError):
    """Base class; the CLI maps any subclass to exit code 1."""


class EmptySet(MTMError):
    pass


class NotEndless(MTMError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"point {point}")


class DuplicateTrace(MTMError):
    pass


class InvalidTrace(MTMError):
    pass


class InvalidRule(MTMError):
    pass


class InvalidStochasticMatrix(MTMError):
    pass


class SolveFailed(MTMError):
    pass


class NotStationaryInput(MTMError):
    pass


class ZeroSpatialMass(MTMError):
    pass


class OverlappingBundles(MTMError):
    pass


class EmptyRoute(MTMError):
    pass


class EndpointMismatch(MTMError):
    pass


class NotBalanced(MTMError):
    pass


class NotStronglyConnected(MTMError):
    pass


class UnrepresentableSlowness(MTMError):
    pass


class UnsupportedCoordinates(MTMError):
    pass


class BoundaryCellNotCovered(MTMError):
    pass


class DegenerateConditioning(MTMError):
    pass


class MismatchedSupport(MTMError):
    pass
