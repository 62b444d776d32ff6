"""Exception hierarchy shared across the pipeline."""


class OddityError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedFormat(OddityError):
    pass


class CorruptImage(OddityError):
    pass


class RegionOutOfBounds(OddityError):
    pass


class GridNotDetected(OddityError):
    pass


class EmptyCloud(OddityError):
    pass


class TooFewPoints(OddityError):
    pass


class NonFiniteInput(OddityError):
    pass


class UnknownConcept(OddityError):
    pass
