"""Exception types raised by the library."""


class PolyaTestError(Exception):
    """Base class for all library errors."""


class DegenerateSample(PolyaTestError, ValueError):
    """A sample is too small or has zero spread."""


class EmptyGroup(PolyaTestError, ValueError):
    """One of the two groups of a grouped sample has no observations."""


class DomainError(PolyaTestError, ValueError):
    """An argument lies outside the domain of a function."""


class InsufficientLabels(PolyaTestError, ValueError):
    """ROC construction needs at least one positive and one negative label."""
