from typing import Optional


class BeamnetError(Exception):
    """Base class for every error raised by beamnet."""


class DomainError(BeamnetError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class OutOfVisibleRegionError(DomainError):
    """The requested lobe does not exist for this normalized radius."""


class EmptyRegionError(DomainError):
    """The 3 dB sidelobe region is empty for this (N, R) pair."""


class RegionError(DomainError):
    """The look angle lies outside the 3 dB sidelobe region."""


class RegimeError(DomainError):
    """A level or threshold falls outside the regime where a bound holds."""


class DegenerateDistributionError(DomainError):
    """The error distribution collapses to a point mass."""


class NumericError(BeamnetError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Attributes:
        residual (Optional[float]): error estimate at the point of failure.
    """

    def __init__(self, message: str, residual: Optional[float] = None) -> None:
        super().__init__(message)
        self.residual = residual


class ResolutionError(NumericError):
    """The characteristic-function grid is too coarse for the requested density."""
