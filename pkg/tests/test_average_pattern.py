import math
import numpy as np
import pytest

from hypothesis import given, settings, strategies as st

from src.beamnet.array_model import ArrayConfig, array_factor, beampattern, power_to_db, sample_realization
from src.beamnet.average_pattern import (
    BEAMWIDTH_CONSTANT_ROUNDED,
    average_pattern,
    average_pattern_db,
    beamwidth_3db,
    beamwidth_constant,
    first_compliant_peak_bound,
    peak_angle,
    peak_value,
    peak_value_exact,
    sidelobe_region,
    zero_angle,
)
from src.beamnet.errors import DomainError, EmptyRegionError, OutOfVisibleRegionError
from src.beamnet.montecarlo import mean_and_stderr, run_trials
from src.beamnet.specfun import j1_ratio


@given(
    st.integers(min_value=1, max_value=4096),
    st.floats(min_value=0.05, max_value=200.0),
    st.floats(min_value=-math.pi, max_value=math.pi),
)
@settings(max_examples=100, deadline=None)
def test_average_pattern_range(n_nodes: int, r_tilde: float, phi: float) -> None:
    value = float(average_pattern(n_nodes, r_tilde, phi))
    assert 1.0 / n_nodes - 1e-15 <= value <= 1.0 + 1e-15


def test_average_pattern_mainbeam_and_floor() -> None:
    assert float(average_pattern(16, 2.0, 0.0)) == pytest.approx(1.0)
    for n_nodes in (16, 256):
        floor_db = float(average_pattern_db(n_nodes, 8.0, math.pi))
        assert floor_db == pytest.approx(-10.0 * math.log10(n_nodes), abs=0.2)
    grid = np.linspace(-math.pi, math.pi, 9)
    assert np.allclose(average_pattern(16, 2.0, grid), average_pattern(16, 2.0, -grid))
    with pytest.raises(DomainError):
        average_pattern(0, 2.0, 0.0)


def test_beamwidth_constant_matches_rounded_value() -> None:
    u = beamwidth_constant()
    assert u == pytest.approx(BEAMWIDTH_CONSTANT_ROUNDED, abs=1e-3)
    assert float(j1_ratio(4.0 * math.pi * u)) ** 2 == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize("r_tilde", [0.5, 1.0, 2.0, 8.0, 64.0])
def test_beamwidth_is_the_half_power_angle(r_tilde: float) -> None:
    width = beamwidth_3db(r_tilde)
    assert 0.0 < width <= math.pi
    # large-N pattern is the squared ratio alone
    power = float(j1_ratio(4.0 * math.pi * r_tilde * math.sin(0.5 * width))) ** 2
    assert power == pytest.approx(0.5, abs=1e-9)


def test_beamwidth_visible_region() -> None:
    with pytest.raises(OutOfVisibleRegionError):
        beamwidth_3db(0.1)
    assert beamwidth_3db(BEAMWIDTH_CONSTANT_ROUNDED) == pytest.approx(math.pi, abs=1e-2)


def test_lobe_angles() -> None:
    assert peak_angle(1, 2.0) == pytest.approx(2.0 * math.asin(0.75 / 8.0))
    assert zero_angle(1, 2.0) == pytest.approx(2.0 * math.asin(1.25 / 8.0))
    assert peak_angle(2, 2.0) < zero_angle(2, 2.0) < peak_angle(3, 2.0)
    with pytest.raises(OutOfVisibleRegionError):
        zero_angle(8, 2.0)
    with pytest.raises(DomainError):
        peak_angle(0, 2.0)
    with pytest.raises(DomainError):
        peak_value(0, 16)


def test_peak_values_agree_asymptotically() -> None:
    for n in (10, 20):
        assert peak_value_exact(n, 256, 100.0) == pytest.approx(peak_value(n, 256), rel=0.05)
    assert peak_value(1, 16) > peak_value(2, 16) > 1.0 / 16


@pytest.mark.parametrize("n_nodes", [2, 16, 64, 256, 1024, 65536])
def test_sidelobe_region_first_compliant_peak(n_nodes: int) -> None:
    region = sidelobe_region(n_nodes, 100.0)
    assert region.n0 >= first_compliant_peak_bound(n_nodes)
    for n in range(region.n0, region.n0 + 5):
        assert n_nodes * peak_value(n, n_nodes) <= 2.0
    if region.n0 > 1:
        assert n_nodes * peak_value(region.n0 - 1, n_nodes) > 2.0
    assert region.phi_zero == pytest.approx(zero_angle(region.n0, 100.0))
    assert region.contains(math.pi) and region.contains(-math.pi)
    assert not region.contains(0.5 * region.phi_zero)
    assert np.array_equal(region.contains([0.0, math.pi]), [False, True])


@pytest.mark.parametrize("n_nodes", [16, 64, 256, 1024])
@pytest.mark.parametrize("r_tilde", [8.0, 32.0, 100.0])
def test_average_sidelobes_stay_within_3db_of_the_floor(n_nodes: int, r_tilde: float) -> None:
    region = sidelobe_region(n_nodes, r_tilde)
    grid = np.linspace(region.phi_zero, math.pi, 20_001)
    assert n_nodes * float(np.max(average_pattern(n_nodes, r_tilde, grid))) <= 2.05


def test_sidelobe_region_errors() -> None:
    with pytest.raises(EmptyRegionError):
        sidelobe_region(1, 10.0)
    with pytest.raises(EmptyRegionError):
        sidelobe_region(1024, 1.0)


@pytest.mark.slow
@pytest.mark.parametrize("n_nodes,r_tilde", [(16, 1.0), (16, 8.0), (256, 2.0)])
def test_monte_carlo_mean_matches_average_pattern(n_nodes: int, r_tilde: float) -> None:
    cfg = ArrayConfig(n_nodes, r_tilde, 42)
    grid = np.linspace(0.0, math.pi, 64)

    def trial(index: int) -> np.ndarray:
        return beampattern(sample_realization(cfg, index), grid, r_tilde).power

    mean, stderr = mean_and_stderr(run_trials(2000, trial))
    analytic = np.asarray(average_pattern(n_nodes, r_tilde, grid))
    # the mainbeam sample has zero variance
    assert np.all(np.abs(mean - analytic) <= 3.0 * stderr + 1e-12)


def test_mainbeam_median_sits_at_half_power() -> None:
    cfg = ArrayConfig(1024, 2.0, 42)
    phi = beamwidth_3db(cfg.r_tilde)

    def trial(index: int) -> float:
        return abs(array_factor(sample_realization(cfg, index), phi, cfg.r_tilde)) ** 2

    powers = run_trials(2000, trial)
    assert float(power_to_db(np.median(powers))) == pytest.approx(-3.0, abs=0.5)
