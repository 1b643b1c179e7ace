import math
import numpy as np
import pytest

from src.beamnet import directivity
from src.beamnet.array_model import ArrayConfig, pattern_from_z, sample_realization
from src.beamnet.directivity import (
    LEMMA1_C0,
    THEOREM1_MU,
    DirectivityReport,
    directivity_lower,
    directivity_lower_closed_form,
    directivity_realization,
    directivity_report,
    lemma1_constants,
    mc_average_directivity,
    theorem1_bound,
)
from src.beamnet.errors import DomainError
from src.beamnet.specfun import hyp2f3_sidelobe

SEEDS = (1, 7, 42, 1234, 2024)


def test_lemma_constants() -> None:
    constants = lemma1_constants()
    assert constants.x0 == pytest.approx(2.4445, abs=1e-3)
    assert constants.alpha0 == pytest.approx(0.4664, abs=1e-3)
    assert constants.c0 == pytest.approx(1.1727, abs=1e-3)
    assert THEOREM1_MU == pytest.approx(LEMMA1_C0 / (4.0 * math.pi))


def test_sidelobe_integral_stays_below_the_lemma_bound() -> None:
    c0 = lemma1_constants().c0
    x = np.geomspace(5.0, 500.0, 200)
    values = np.asarray(hyp2f3_sidelobe(x))
    assert np.all(values <= c0 / x)


def test_single_node_directivity() -> None:
    real = sample_realization(ArrayConfig(1, 3.0, 0), 0)
    assert directivity_realization(real, 3.0) == 1.0
    assert directivity_lower(1, 3.0) == 1.0


@pytest.mark.parametrize("seed", SEEDS)
def test_directivity_is_the_inverse_pattern_mean(seed: int) -> None:
    cfg = ArrayConfig(16, 2.0, seed)
    real = sample_realization(cfg, 0)
    z = real.radii * np.sin(real.angles)
    grid = np.linspace(-math.pi, math.pi, 4097)[:-1]
    mean_power = float(np.mean(pattern_from_z(z, grid, cfg.r_tilde)))
    value = directivity_realization(real, cfg.r_tilde)
    assert value == pytest.approx(1.0 / mean_power, rel=1e-8)
    assert 0.0 < value <= cfg.n_nodes


def test_pairwise_and_angular_routes_agree(monkeypatch: pytest.MonkeyPatch) -> None:
    cfg = ArrayConfig(64, 4.0, 42)
    real = sample_realization(cfg, 0)
    pairwise = directivity_realization(real, cfg.r_tilde)
    monkeypatch.setattr(directivity, "PAIRWISE_MAX_NODES", 1)
    angular = directivity_realization(real, cfg.r_tilde)
    assert angular == pytest.approx(pairwise, rel=1e-9)


@pytest.mark.parametrize("n_nodes,r_tilde", [(16, 0.5), (16, 2.0), (256, 8.0), (256, 64.0)])
def test_lower_bound_routes_agree(n_nodes: int, r_tilde: float) -> None:
    value = directivity_lower(n_nodes, r_tilde)
    assert 1.0 <= value <= n_nodes
    assert value == pytest.approx(directivity_lower_closed_form(n_nodes, r_tilde), rel=1e-6)


@pytest.mark.parametrize("n_nodes", [16, 256])
def test_lower_bound_grows_with_the_radius(n_nodes: int) -> None:
    values = [directivity_lower(n_nodes, r) for r in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)]
    assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("n_nodes", [16, 256])
@pytest.mark.parametrize("r_tilde", [1.0, 2.0, 8.0, 32.0, 128.0])
def test_density_bound_holds(n_nodes: int, r_tilde: float) -> None:
    normalized = directivity_lower(n_nodes, r_tilde) / n_nodes
    assert normalized >= theorem1_bound(n_nodes, r_tilde)
    assert theorem1_bound(n_nodes, r_tilde) >= theorem1_bound(n_nodes, r_tilde, limit=True)


def test_theorem1_bound_validation() -> None:
    assert theorem1_bound(2, 1.0, limit=True) == pytest.approx(1.0 / (1.0 + 2.0 * THEOREM1_MU))
    with pytest.raises(DomainError):
        theorem1_bound(0, 1.0)
    with pytest.raises(DomainError):
        theorem1_bound(4, 0.0)


def test_mc_average_directivity_needs_two_trials() -> None:
    with pytest.raises(DomainError):
        mc_average_directivity(ArrayConfig(16, 2.0, 0), 1)


@pytest.mark.parametrize("seed", SEEDS)
def test_jensen_inequality(seed: int) -> None:
    report = directivity_report(ArrayConfig(16, 8.0, seed), 200)
    assert isinstance(report, DirectivityReport)
    assert report.d_realizations.shape == (200,)
    assert report.jensen_consistent
    assert report.d_tilde_av <= report.d_av_mc + 3.0 * report.d_av_stderr
    summary = report.to_dict()
    assert summary["n_trials"] == 200
    assert summary["seed"] == seed
    assert summary["jensen_consistent"] is True


@pytest.mark.slow
def test_directivity_collapses_at_equal_density() -> None:
    small, _, _ = mc_average_directivity(ArrayConfig(32, 16.0, 7), 300)
    large, _, _ = mc_average_directivity(ArrayConfig(128, 64.0, 7), 300)
    assert small / 32 == pytest.approx(large / 128, rel=0.03)
    assert large / 128 >= 1.0 / (1.0 + 2.0 * 0.09332) - 0.02
