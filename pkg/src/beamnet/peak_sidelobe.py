"""Peak-sidelobe outage: level-crossing bound, its inversion and Monte Carlo measurement.

In the sidelobe region the scaled array factor behaves like a stationary
complex Gaussian process in u = sin(phi / 2), with per-component
autocorrelation (1/2) 2J1(4 pi R v) / (4 pi R v). The maximum of the pattern
exceeds P0 only if its envelope crosses sqrt(N P0) upward at least once, so
the mean number of upcrossings bounds the outage probability.
"""

import logging
import math
import numpy as np

from dataclasses import dataclass
from typing import Optional
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from .array_model import ArrayConfig, array_factor_grid, sample_realization
from .average_pattern import SidelobeRegion, sidelobe_region
from .ccdf import CcdfCurve, as_thresholds
from .errors import DomainError, NumericError, RegimeError
from .montecarlo import run_trials, stream_rng

logger = logging.getLogger(__name__)

# the crossing bound is decreasing, hence meaningful, only above this normalized level
MIN_NORMALIZED_P0 = 0.5
# angles per full turn are SAMPLING_DENSITY * pi * R
SAMPLING_DENSITY = 16.0


@dataclass(frozen=True)
class OutageQuery:
    """Threshold query for the peak-sidelobe bound.

    Attributes:
        n_nodes (int): number of nodes.
        r_tilde (float): normalized disk radius.
        p0 (float): linear power threshold.
    """

    n_nodes: int
    r_tilde: float
    p0: float

    def __post_init__(self) -> None:
        if self.normalized_p0 <= MIN_NORMALIZED_P0:
            raise RegimeError(
                f"N * P0 = {self.normalized_p0:g} is not above {MIN_NORMALIZED_P0}; the crossing bound does not apply"
            )

    @property
    def normalized_p0(self) -> float:
        return self.n_nodes * self.p0

    @classmethod
    def from_normalized(
        cls, n_nodes: int, r_tilde: float, normalized_p0: float
    ) -> "OutageQuery":
        return cls(n_nodes=n_nodes, r_tilde=r_tilde, p0=normalized_p0 / n_nodes)


@dataclass
class UpcrossingEstimate:
    """Upcrossing rate counted on synthetic Gaussian envelopes.

    Attributes:
        rate (float): counted upcrossings per unit u.
        predicted (float): closed-form rate per unit u.
        crossings (int): number of upcrossings counted.
        length (float): total length in u covered by the paths.
    """

    rate: float
    predicted: float
    crossings: int
    length: float

    @property
    def relative_bias(self) -> float:
        return self.rate / self.predicted - 1.0


def derivative_variance(r_tilde: float) -> float:
    """Variance 2 pi^2 R^2 of the derivative of each envelope component along u."""
    return 2.0 * math.pi**2 * r_tilde**2


def upcrossing_rate(level_a: float, r_tilde: float) -> float:
    """Upcrossings of level a per unit u by the envelope, 2 sqrt(pi) R a exp(-a^2)."""
    if level_a < 0:
        raise DomainError("Envelope levels are non-negative")
    return 2.0 * math.sqrt(math.pi) * r_tilde * level_a * math.exp(-level_a * level_a)


def _check_level(level_a: float) -> None:
    if level_a * level_a <= MIN_NORMALIZED_P0:
        raise RegimeError(
            f"Level {level_a:g} is not above 1/sqrt(2); the crossing count is not monotone there"
        )


def mean_upcrossings(level_a: float, region: SidelobeRegion) -> float:
    """Mean number of upcrossings of level a over both sides of the sidelobe region.

    Args:
        level_a (float): envelope level, above 1/sqrt(2).
        region (SidelobeRegion): region for (N, R).

    Returns:
        float: 4 (1 - sin(phi_zero / 2)) sqrt(pi) R a exp(-a^2).
    """
    _check_level(level_a)
    # u runs over [sin(phi_zero / 2), 1] on each side
    span = 2.0 * (1.0 - math.sin(0.5 * region.phi_zero))
    return span * upcrossing_rate(level_a, region.r_tilde)


def outage_upper_bound(q: OutageQuery, region: Optional[SidelobeRegion] = None) -> float:
    """Upper bound on Pr(max sidelobe > P0) clamped at 1.

    Args:
        q (OutageQuery): threshold query.
        region (Optional[SidelobeRegion]): sidelobe region; built from the query when omitted.

    Returns:
        float: bound in [0, 1].
    """
    if region is None:
        region = sidelobe_region(q.n_nodes, q.r_tilde)
    elif region.n_nodes != q.n_nodes or region.r_tilde != q.r_tilde:
        raise DomainError("The sidelobe region belongs to a different (N, R) pair")
    return min(1.0, mean_upcrossings(math.sqrt(q.normalized_p0), region))


def simplified_bound(normalized_p0: float, r_tilde: float) -> float:
    """Bound 4 sqrt(pi) R sqrt(P) exp(-P) for a region that reaches the mainbeam, clamped at 1."""
    if normalized_p0 <= MIN_NORMALIZED_P0:
        raise RegimeError(f"Normalized threshold {normalized_p0:g} is not above 1/2")
    value = (
        4.0 * math.sqrt(math.pi) * r_tilde * math.sqrt(normalized_p0) * math.exp(-normalized_p0)
    )
    return min(1.0, value)


def threshold_for_outage(p_out: float, r_tilde: float) -> float:
    """Largest normalized threshold P the simplified bound allows at outage p_out.

    Solves 4 sqrt(pi) R sqrt(P) exp(-P) = p_out on the decreasing branch P > 1/2,
    in the log domain.

    Args:
        p_out (float): outage probability in (0, 1).
        r_tilde (float): normalized disk radius.

    Returns:
        float: normalized threshold N P0.

    Raises:
        RegimeError: the bound never exceeds p_out, so there is no root above 1/2.
    """
    if not 0.0 < p_out < 1.0:
        raise DomainError("p_out must lie strictly between 0 and 1")
    if r_tilde <= 0:
        raise DomainError("r_tilde must be strictly positive")
    log_scale = math.log(4.0 * math.sqrt(math.pi) * r_tilde)
    log_target = math.log(p_out)

    def excess(p: float) -> float:
        return log_scale + 0.5 * math.log(p) - p - log_target

    if excess(MIN_NORMALIZED_P0) <= 0.0:
        raise RegimeError(
            f"The bound stays below p_out={p_out:g} for r_tilde={r_tilde:g}; no threshold above 1/2"
        )
    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
    try:
        root = optimize.brentq(excess, MIN_NORMALIZED_P0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    except ValueError as e:
        raise NumericError(f"Threshold bracket failed: {e}") from e
    logger.debug("threshold for p_out=%g r_tilde=%g in [0.5, %g]: %.12g", p_out, r_tilde, hi, root)
    return float(root)


def region_grid(region: SidelobeRegion, oversample: float = 1.0) -> NDArray[np.float64]:
    """Uniform grid over the sidelobe region with at least 16 pi R points per 2 pi.

    The region { phi_zero <= |phi| <= pi } is one arc through phi = pi, so the
    grid is laid out along [phi_zero, 2 pi - phi_zero] and wrapped into [-pi, pi].
    """
    if oversample <= 0:
        raise DomainError("oversample must be strictly positive")
    per_turn = math.ceil(SAMPLING_DENSITY * math.pi * region.r_tilde * oversample)
    arc = 2.0 * (math.pi - region.phi_zero)
    count = max(3, math.ceil(per_turn * arc / (2.0 * math.pi)) + 1)
    phi = np.linspace(region.phi_zero, 2.0 * math.pi - region.phi_zero, count)
    grid = np.where(phi > math.pi, phi - 2.0 * math.pi, phi)
    grid[-1] = -region.phi_zero
    return grid


def _refined_max(power: NDArray[np.float64]) -> float:
    i = int(np.argmax(power))
    peak = float(power[i])
    if i == 0 or i == power.size - 1:
        return peak
    y0, y1, y2 = float(power[i - 1]), peak, float(power[i + 1])
    curvature = y0 - 2.0 * y1 + y2
    if curvature >= 0.0:
        return peak
    return y1 - (y0 - y2) ** 2 / (8.0 * curvature)


def peak_sidelobe_samples(
    cfg: ArrayConfig,
    n_trials: int,
    oversample: float = 1.0,
    refine: bool = False,
    workers: Optional[int] = None,
) -> NDArray[np.float64]:
    """Maximum of the pattern over the sidelobe region, one value per realization."""
    region = sidelobe_region(cfg.n_nodes, cfg.r_tilde)
    grid = region_grid(region, oversample)
    logger.debug("peak search over %d angles from phi_zero=%.6f", grid.size, region.phi_zero)

    def trial(index: int) -> float:
        power = np.abs(array_factor_grid(sample_realization(cfg, index), grid, cfg.r_tilde)) ** 2
        return _refined_max(power) if refine else float(power.max())

    return run_trials(n_trials, trial, workers)


def mc_peak_outage(
    cfg: ArrayConfig,
    thresholds: ArrayLike,
    n_trials: int,
    oversample: float = 1.0,
    refine: bool = False,
    workers: Optional[int] = None,
) -> CcdfCurve:
    """Empirical CCDF of the peak sidelobe.

    Args:
        cfg (ArrayConfig): experiment identity.
        thresholds (ArrayLike): linear power thresholds.
        n_trials (int): number of realizations, at least 100.
        oversample (float): multiplies the 16 pi R sampling density.
        refine (bool): refine each maximum with a 3-point parabola.
        workers (Optional[int]): worker threads.

    Returns:
        CcdfCurve: method "monte-carlo" with binomial standard errors.
    """
    if n_trials < 100:
        raise DomainError("mc_peak_outage needs at least 100 trials")
    p0 = as_thresholds(thresholds)
    peaks = peak_sidelobe_samples(cfg, n_trials, oversample, refine, workers)
    probs = (peaks[:, None] > p0[None, :]).mean(axis=0)
    std_errors = np.sqrt(probs * (1.0 - probs) / n_trials)
    return CcdfCurve(thresholds=p0, probs=probs, method="monte-carlo", std_errors=std_errors)


def synthetic_envelope_upcrossings(
    r_tilde: float,
    level_a: float,
    seed: int = 0,
    n_paths: int = 32,
    path_length: float = 256.0,
    samples_per_period: int = 16,
) -> UpcrossingEstimate:
    """Counts envelope upcrossings of stationary complex Gaussian processes in u.

    Each path is synthesized in the frequency domain: the spectrum of the
    autocorrelation 2J1(4 pi R v) / (4 pi R v) is the semicircle law scaled to
    angular frequencies |w| < 4 pi R, so white complex noise shaped by its
    square root and inverted by FFT gives a process with E|Z|^2 = 1.

    Args:
        r_tilde (float): normalized disk radius.
        level_a (float): envelope level.
        seed (int): seed of the path generator.
        n_paths (int): number of independent paths.
        path_length (float): length of each path in u.
        samples_per_period (int): samples per period of the highest frequency.

    Returns:
        UpcrossingEstimate: counted and predicted rates.
    """
    if r_tilde <= 0 or level_a < 0 or n_paths < 1 or path_length <= 0:
        raise DomainError("Invalid synthetic envelope parameters")
    bandwidth = 4.0 * math.pi * r_tilde
    step = 2.0 * math.pi / (bandwidth * samples_per_period)
    size = 1 << math.ceil(math.log2(path_length / step))
    freqs = 2.0 * math.pi * np.fft.fftfreq(size, d=step)
    d_freq = 2.0 * math.pi / (size * step)
    ratio = np.clip(freqs / bandwidth, -1.0, 1.0)
    spectrum = 2.0 / (math.pi * bandwidth) * np.sqrt(1.0 - ratio**2)
    amplitude = np.sqrt(spectrum * d_freq)

    crossings = 0
    for path in range(n_paths):
        rng = stream_rng(seed, path)
        noise = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)
        envelope = np.abs(np.fft.ifft(amplitude * noise) * size)
        crossings += int(np.count_nonzero((envelope[:-1] < level_a) & (envelope[1:] >= level_a)))
    length = n_paths * (size - 1) * step
    rate = crossings / length
    predicted = upcrossing_rate(level_a, r_tilde)
    logger.debug("synthetic envelopes: %d crossings over %.1f, rate %.4f vs %.4f", crossings, length, rate, predicted)
    return UpcrossingEstimate(rate=rate, predicted=predicted, crossings=crossings, length=length)
