import math
import numpy as np
import pytest

from hypothesis import given, settings, strategies as st

from src.beamnet.array_model import ArrayConfig
from src.beamnet.average_pattern import sidelobe_region
from src.beamnet.errors import DomainError, EmptyRegionError, RegimeError
from src.beamnet.peak_sidelobe import (
    OutageQuery,
    derivative_variance,
    mc_peak_outage,
    mean_upcrossings,
    outage_upper_bound,
    peak_sidelobe_samples,
    region_grid,
    simplified_bound,
    synthetic_envelope_upcrossings,
    threshold_for_outage,
    upcrossing_rate,
)


def test_outage_query_regime() -> None:
    q = OutageQuery.from_normalized(32, 16.0, 4.0)
    assert q.p0 == pytest.approx(4.0 / 32)
    assert q.normalized_p0 == pytest.approx(4.0)
    with pytest.raises(RegimeError):
        OutageQuery(32, 16.0, 0.5 / 32)
    assert isinstance(RegimeError("x"), DomainError)


def test_upcrossing_rate_closed_form() -> None:
    assert derivative_variance(2.0) == pytest.approx(8.0 * math.pi**2)
    assert upcrossing_rate(1.0, 2.0) == pytest.approx(4.0 * math.sqrt(math.pi) / math.e)
    assert upcrossing_rate(0.0, 2.0) == 0.0
    with pytest.raises(DomainError):
        upcrossing_rate(-1.0, 2.0)


def test_mean_upcrossings_over_the_region() -> None:
    region = sidelobe_region(32, 16.0)
    level = 2.0
    expected = 4.0 * (1.0 - math.sin(0.5 * region.phi_zero)) * math.sqrt(math.pi) * 16.0 * level * math.exp(-4.0)
    assert mean_upcrossings(level, region) == pytest.approx(expected)
    with pytest.raises(RegimeError):
        mean_upcrossings(0.5, region)


def test_outage_bound_is_clamped_and_decreasing() -> None:
    values = [outage_upper_bound(OutageQuery.from_normalized(128, 64.0, p)) for p in (1.0, 2.0, 4.0, 8.0, 16.0)]
    assert values[0] == 1.0
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-3
    region = sidelobe_region(128, 64.0)
    q = OutageQuery.from_normalized(128, 64.0, 8.0)
    assert outage_upper_bound(q, region) == outage_upper_bound(q)
    with pytest.raises(DomainError):
        outage_upper_bound(q, sidelobe_region(32, 16.0))
    with pytest.raises(EmptyRegionError):
        outage_upper_bound(OutageQuery.from_normalized(1024, 1.0, 4.0))


def test_simplified_bound_dominates_the_region_bound() -> None:
    q = OutageQuery.from_normalized(32, 16.0, 6.0)
    assert simplified_bound(6.0, 16.0) >= outage_upper_bound(q)
    with pytest.raises(RegimeError):
        simplified_bound(0.4, 16.0)


@given(
    st.sampled_from([0.001, 0.01, 0.1]),
    st.floats(min_value=1.0, max_value=100.0),
)
@settings(max_examples=60, deadline=None)
def test_threshold_inversion_round_trip(p_out: float, r_tilde: float) -> None:
    p_norm = threshold_for_outage(p_out, r_tilde)
    assert p_norm > 0.5
    assert 10.0 * math.log10(p_norm) < 12.0
    assert simplified_bound(p_norm, r_tilde) == pytest.approx(p_out, abs=1e-10)


def test_threshold_inversion_is_monotone() -> None:
    for p_out in (0.001, 0.01, 0.1):
        values = [threshold_for_outage(p_out, r) for r in np.logspace(0.0, 2.0, 21)]
        assert all(a < b for a, b in zip(values, values[1:]))


def test_threshold_inversion_errors() -> None:
    with pytest.raises(RegimeError):
        threshold_for_outage(0.1, 0.01)
    with pytest.raises(DomainError):
        threshold_for_outage(1.5, 4.0)
    with pytest.raises(DomainError):
        threshold_for_outage(0.1, 0.0)


def test_region_grid_covers_the_region() -> None:
    region = sidelobe_region(32, 16.0)
    grid = region_grid(region)
    assert np.all(region.contains(grid))
    assert np.all(np.abs(grid) <= math.pi)
    arc = 2.0 * (math.pi - region.phi_zero)
    assert grid.size >= 16.0 * math.pi * 16.0 * arc / (2.0 * math.pi)
    assert region_grid(region, oversample=2.0).size > grid.size
    with pytest.raises(DomainError):
        region_grid(region, oversample=0.0)


def test_peak_samples_exceed_the_floor() -> None:
    cfg = ArrayConfig(32, 16.0, 42)
    peaks = peak_sidelobe_samples(cfg, 50)
    refined = peak_sidelobe_samples(cfg, 50, refine=True)
    assert peaks.shape == (50,)
    assert np.all(peaks > 1.0 / 32)
    assert np.all(refined >= peaks - 1e-12)


def test_mc_peak_outage_validation() -> None:
    with pytest.raises(DomainError):
        mc_peak_outage(ArrayConfig(32, 16.0, 0), [0.1], 10)


@pytest.mark.slow
@pytest.mark.parametrize("n_nodes", [32, 128])
def test_empirical_outage_stays_below_the_bound(n_nodes: int) -> None:
    r_tilde = n_nodes / 2.0
    cfg = ArrayConfig(n_nodes, r_tilde, 7)
    normalized = np.linspace(2.0, 10.0, 9)
    mc = mc_peak_outage(cfg, normalized / n_nodes, 500)
    assert mc.std_errors is not None
    region = sidelobe_region(n_nodes, r_tilde)
    for i, p in enumerate(normalized):
        bound = outage_upper_bound(OutageQuery.from_normalized(n_nodes, r_tilde, float(p)), region)
        assert mc.probs[i] <= bound + 3.0 * mc.std_errors[i] + 0.01


@pytest.mark.slow
def test_doubling_the_sampling_density_is_self_consistent() -> None:
    cfg = ArrayConfig(32, 16.0, 42)
    p0 = np.linspace(2.0, 10.0, 9) / 32
    base = mc_peak_outage(cfg, p0, 500, oversample=2.0, refine=True)
    dense = mc_peak_outage(cfg, p0, 500, oversample=4.0, refine=True)
    assert base.std_errors is not None
    # where the standard error vanishes, one realization changing side is the finest step
    tolerance = np.maximum(base.std_errors, 1.0 / 500)
    assert np.all(np.abs(dense.probs - base.probs) <= tolerance)


@pytest.mark.slow
def test_bound_is_within_a_decade_of_the_empirical_outage() -> None:
    n_nodes, r_tilde = 128, 64.0
    normalized = np.linspace(4.0, 14.0, 41)
    mc = mc_peak_outage(ArrayConfig(n_nodes, r_tilde, 1234), normalized / n_nodes, 2000)
    region = sidelobe_region(n_nodes, r_tilde)
    window = (mc.probs >= 1e-2) & (mc.probs <= 1e-1)
    assert np.count_nonzero(window) >= 2
    for p, prob in zip(normalized[window], mc.probs[window]):
        bound = outage_upper_bound(OutageQuery.from_normalized(n_nodes, r_tilde, float(p)), region)
        assert bound <= 10.0 * prob


@pytest.mark.parametrize("level", [1.0, 1.5])
def test_synthetic_envelope_crossing_rate(level: float) -> None:
    estimate = synthetic_envelope_upcrossings(2.0, level, seed=3, n_paths=16)
    assert estimate.crossings > 1000
    assert estimate.predicted == pytest.approx(upcrossing_rate(level, 2.0))
    assert abs(estimate.relative_bias) < 0.06
    with pytest.raises(DomainError):
        synthetic_envelope_upcrossings(0.0, level)
