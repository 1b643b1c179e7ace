import math
import numpy as np
import pytest

from scipy import integrate, special, stats

from src.beamnet.array_model import ArrayConfig, power_to_db
from src.beamnet.average_pattern import average_pattern
from src.beamnet.errors import DegenerateDistributionError, DomainError
from src.beamnet.impairments import (
    ClosedLoopParams,
    OpenLoopParams,
    apsi_mainbeam_approx,
    attenuation_angle,
    attenuation_phase,
    attenuation_radial,
    avg_pattern_closed_loop,
    avg_pattern_open_loop,
    mc_impaired_pattern,
    radial_error_mass,
    radial_error_pdf,
    radial_half_power_error,
    sample_radial_error,
    sample_tikhonov,
    tikhonov_pdf,
)
from src.beamnet.montecarlo import stream_rng
from src.beamnet.specfun import hyp1f2_angle, j1_ratio


def test_params_validation() -> None:
    assert ClosedLoopParams.from_sigma2(0.25).loop_snr == pytest.approx(4.0)
    assert ClosedLoopParams(4.0).sigma2_phi == pytest.approx(0.25)
    with pytest.raises(DomainError):
        ClosedLoopParams(0.0)
    with pytest.raises(DomainError):
        ClosedLoopParams.from_sigma2(-1.0)
    with pytest.raises(DomainError):
        OpenLoopParams(-0.1, 0.0)
    with pytest.raises(DomainError):
        OpenLoopParams(0.1, 4.0)


@pytest.mark.parametrize("loop_snr", [0.5, 4.0, 100.0, 1e4])
def test_tikhonov_pdf_is_normalized(loop_snr: float) -> None:
    p = ClosedLoopParams(loop_snr)
    mass, _ = integrate.quad(lambda x: tikhonov_pdf(x, p), -math.pi, math.pi, points=[0.0], limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        tikhonov_pdf(4.0, p)


def test_tikhonov_sampler_matches_attenuation() -> None:
    p = ClosedLoopParams(4.0)
    offsets = sample_tikhonov(p, stream_rng(11, 0), 200_000)
    assert np.all(np.abs(offsets) <= math.pi)
    expected = special.i1(4.0) / special.i0(4.0)
    assert float(np.mean(np.cos(offsets))) == pytest.approx(expected, abs=5e-3)
    assert attenuation_phase(p) == pytest.approx(expected, rel=1e-12)


def test_tikhonov_sampler_matches_the_density() -> None:
    p = ClosedLoopParams(10.0)
    offsets = sample_tikhonov(p, stream_rng(13, 0), 1_000_000)
    # the outer bins pool the tails so every expected count stays above 5
    edges = np.concatenate(([-math.pi], np.linspace(-1.5, 1.5, 31), [math.pi]))
    observed, _ = np.histogram(offsets, bins=edges)
    mass = np.array(
        [integrate.quad(lambda x: tikhonov_pdf(x, p), lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])]
    )
    expected = observed.sum() * mass / mass.sum()
    assert np.all(expected >= 5.0)
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_three_db_loop_snr_halves_the_mainbeam() -> None:
    p = ClosedLoopParams(10.0 ** 0.3)
    assert float(power_to_db(attenuation_phase(p) ** 2)) == pytest.approx(-3.0, abs=0.5)
    assert attenuation_phase(ClosedLoopParams(1e6)) == pytest.approx(1.0, abs=1e-6)


def test_closed_loop_pattern() -> None:
    p = ClosedLoopParams(2.0)
    grid = np.linspace(-math.pi, math.pi, 33)
    pattern = np.asarray(avg_pattern_closed_loop(16, 2.0, grid, p))
    ideal = np.asarray(average_pattern(16, 2.0, grid))
    assert np.all(pattern <= ideal + 1e-15)
    assert np.all(pattern >= 1.0 / 16 - 1e-15)
    mainbeam = float(avg_pattern_closed_loop(16, 2.0, 0.0, p))
    assert mainbeam == pytest.approx(1.0 / 16 + (15.0 / 16) * attenuation_phase(p) ** 2)


def test_impaired_patterns_need_nodes() -> None:
    with pytest.raises(DomainError):
        avg_pattern_closed_loop(0, 2.0, 0.0, ClosedLoopParams(4.0))
    with pytest.raises(DomainError):
        avg_pattern_open_loop(0, 2.0, 0.0, OpenLoopParams(0.1, 0.0))


def test_radial_pdf() -> None:
    p = OpenLoopParams(0.2, 0.0)
    assert radial_error_pdf(0.3, p) == 0.0
    assert math.isinf(radial_error_pdf(0.0, p))
    assert radial_error_pdf(0.2, p) == pytest.approx(0.0, abs=1e-12)
    assert radial_error_pdf(0.05, p) == pytest.approx(radial_error_pdf(-0.05, p))
    assert radial_error_mass(p) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DegenerateDistributionError):
        radial_error_pdf(0.0, OpenLoopParams(0.0, 0.0))
    assert isinstance(DegenerateDistributionError("x"), DomainError)


def test_radial_sampler_matches_attenuation() -> None:
    p = OpenLoopParams(0.3, 0.0)
    v = sample_radial_error(p, stream_rng(5, 0), 200_000)
    assert np.all(np.abs(v) <= 0.3)
    assert float(np.mean(np.cos(2.0 * math.pi * v))) == pytest.approx(attenuation_radial(p), abs=5e-3)


def test_radial_attenuation() -> None:
    assert attenuation_radial(OpenLoopParams(0.0, 0.0)) == 1.0
    values = [attenuation_radial(OpenLoopParams(r, 0.0)) for r in (0.05, 0.1, 0.2, 0.3)]
    assert all(a > b for a, b in zip(values, values[1:]))
    half = radial_half_power_error()
    assert 0.0 < half < 0.5
    assert attenuation_radial(OpenLoopParams(half, 0.0)) ** 2 == pytest.approx(0.5, abs=1e-9)


def test_angle_attenuation_without_error_is_the_ideal_factor() -> None:
    grid = np.linspace(-1.0, 1.0, 11)
    p = OpenLoopParams(0.0, 0.0)
    assert np.allclose(attenuation_angle(grid, p, 2.0), j1_ratio(4.0 * math.pi * 2.0 * np.sin(0.5 * grid)), atol=1e-15)


@pytest.mark.parametrize("r_tilde,psi_max", [(2.0, 0.05), (8.0, 0.02), (1.0, 0.1)])
def test_angle_attenuation_on_the_mainbeam(r_tilde: float, psi_max: float) -> None:
    p = OpenLoopParams(0.0, psi_max)
    value = attenuation_angle(0.0, p, r_tilde)
    assert value == pytest.approx(float(hyp1f2_angle(math.pi * r_tilde * psi_max)), abs=1e-3)
    with pytest.raises(DomainError):
        attenuation_angle(4.0, p, r_tilde)


def test_mainbeam_approximation_weightings() -> None:
    p = OpenLoopParams(0.0, 0.05)
    r_tilde = 2.0
    assert apsi_mainbeam_approx(0.0, p, r_tilde, "mirrored") == pytest.approx(
        apsi_mainbeam_approx(0.0, p, r_tilde, "window")
    )
    assert apsi_mainbeam_approx(0.05, p, r_tilde) == pytest.approx(1.0)
    assert apsi_mainbeam_approx(-0.05, p, r_tilde) == pytest.approx(1.0)
    for phi in (-0.15, -0.05, 0.0, 0.05, 0.1, 0.15):
        exact = attenuation_angle(phi, p, r_tilde)
        assert apsi_mainbeam_approx(phi, p, r_tilde, "window") == pytest.approx(exact, abs=5e-3)
    with pytest.raises(DomainError):
        apsi_mainbeam_approx(0.0, p, r_tilde, "other")  # type: ignore[arg-type]


def test_mirrored_weighting_overshoots_beyond_the_error_bound() -> None:
    p = OpenLoopParams(0.0, 0.1)
    grid = np.linspace(-0.4, 0.4, 41)
    mirrored = np.asarray(apsi_mainbeam_approx(grid, p, 4.0))
    window = np.asarray(apsi_mainbeam_approx(grid, p, 4.0, "window"))
    assert np.max(mirrored) > 1.0
    assert np.all(mirrored[np.abs(grid) <= p.psi_max + 1e-12] <= 1.0 + 1e-12)
    assert np.all(np.abs(window) <= 1.0 + 1e-12)


def test_open_loop_without_errors_is_the_average_pattern() -> None:
    grid = np.linspace(-math.pi, math.pi, 17)
    pattern = avg_pattern_open_loop(16, 2.0, grid, OpenLoopParams(0.0, 0.0))
    assert np.allclose(pattern, average_pattern(16, 2.0, grid), atol=1e-14)


def test_mc_impaired_pattern_validation() -> None:
    cfg = ArrayConfig(16, 2.0, 0)
    with pytest.raises(DomainError):
        mc_impaired_pattern(cfg, [0.0], "closed", ClosedLoopParams(4.0), 50)
    with pytest.raises(DomainError):
        mc_impaired_pattern(cfg, [0.0], "closed", OpenLoopParams(0.1, 0.0), 100)
    with pytest.raises(DomainError):
        mc_impaired_pattern(cfg, [0.0], "open", ClosedLoopParams(4.0), 100)
    with pytest.raises(DomainError):
        mc_impaired_pattern(cfg, [0.0], "other", ClosedLoopParams(4.0), 100)  # type: ignore[arg-type]


def test_mc_closed_loop_matches_the_analytic_pattern() -> None:
    cfg = ArrayConfig(16, 2.0, 42)
    p = ClosedLoopParams(2.0)
    grid = np.linspace(0.0, 0.3, 32)
    curve = mc_impaired_pattern(cfg, grid, "closed", p, 2000)
    assert curve.label == "monte-carlo-closed"
    assert curve.std_errors is not None
    analytic = np.asarray(avg_pattern_closed_loop(16, 2.0, grid, p))
    assert np.all(np.abs(curve.power - analytic) <= 3.0 * curve.std_errors)


@pytest.mark.parametrize("loop_snr", [2.0, 4.0, 10.0])
def test_mc_closed_loop_mainbeam_follows_the_attenuation(loop_snr: float) -> None:
    p = ClosedLoopParams(loop_snr)
    curve = mc_impaired_pattern(ArrayConfig(16, 2.0, 42), [0.0], "closed", p, 2000)
    assert curve.std_errors is not None
    predicted = 1.0 / 16 + (15.0 / 16) * attenuation_phase(p) ** 2
    assert abs(curve.power[0] - predicted) <= 3.0 * curve.std_errors[0]


def test_mc_open_loop_matches_the_analytic_pattern() -> None:
    cfg = ArrayConfig(16, 2.0, 7)
    p = OpenLoopParams(0.1, 0.02)
    grid = np.linspace(0.0, 0.2, 5)
    curve = mc_impaired_pattern(cfg, grid, "open", p, 2000)
    assert curve.label == "monte-carlo-open"
    assert curve.std_errors is not None
    analytic = np.asarray(avg_pattern_open_loop(16, 2.0, grid, p))
    assert np.all(np.abs(curve.power - analytic) <= 5.0 * curve.std_errors + 0.02)


def test_mc_open_loop_without_error_is_coherent_on_the_mainbeam() -> None:
    cfg = ArrayConfig(8, 1.0, 3)
    ideal = mc_impaired_pattern(cfg, [0.0, 1.0], "open", OpenLoopParams(0.0, 0.0), 100)
    # zero location error leaves every realization coherent on the mainbeam
    assert ideal.power[0] == pytest.approx(1.0)


def test_angle_errors_keep_the_open_loop_peak_on_axis() -> None:
    p = OpenLoopParams(0.0, 0.1)
    grid = np.linspace(-0.3, 0.3, 31)
    center = grid.size // 2
    curve = mc_impaired_pattern(ArrayConfig(16, 4.0, 5), grid, "open", p, 4000)
    assert int(np.argmax(curve.power)) == center
    at_bound = np.isclose(np.abs(grid), p.psi_max)
    assert np.count_nonzero(at_bound) == 2
    assert np.all(curve.power[at_bound] < 0.5 * curve.power[center])
    exact = np.square(attenuation_angle(grid, p, 4.0))
    assert int(np.argmax(exact)) == center
    # only the two-term mirrored form moves its maximum off axis
    mirrored = np.asarray(apsi_mainbeam_approx(grid, p, 4.0))
    assert abs(grid[int(np.argmax(mirrored))]) > p.psi_max
