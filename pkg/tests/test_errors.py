import pytest

from src.beamnet.errors import (
    BeamnetError,
    DegenerateDistributionError,
    DomainError,
    EmptyRegionError,
    NumericError,
    OutOfVisibleRegionError,
    RegimeError,
    RegionError,
    ResolutionError,
)


@pytest.mark.parametrize(
    "error_class",
    [OutOfVisibleRegionError, EmptyRegionError, RegionError, RegimeError, DegenerateDistributionError],
)
def test_domain_errors_are_value_errors(error_class: type) -> None:
    assert issubclass(error_class, DomainError)
    assert issubclass(error_class, ValueError)
    assert issubclass(error_class, BeamnetError)
    with pytest.raises(ValueError):
        raise error_class("out of domain")


def test_numeric_error_residual() -> None:
    e = NumericError("did not converge", residual=1.5e-3)
    assert e.residual == 1.5e-3
    assert str(e) == "did not converge"
    assert NumericError("no residual").residual is None
    assert isinstance(e, ArithmeticError)
    assert not isinstance(e, ValueError)


def test_resolution_error_is_numeric() -> None:
    e = ResolutionError("grid too coarse", residual=2e-5)
    assert isinstance(e, NumericError)
    assert isinstance(e, BeamnetError)
    assert e.residual == 2e-5
