"""Average-pattern degradation under imperfect phase.

Closed loop: each node locks to a beacon with a phase-locked loop and keeps a
residual Tikhonov-distributed phase offset. Open loop: each node presets its
phase from an estimate of its own position, off by a radial error uniform on
[-r_max, r_max] and an angular error uniform on [-psi_max, psi_max].
"""

import functools
import logging
import math
import numpy as np

from dataclasses import dataclass
from typing import Literal, Optional, Tuple, Union
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special, stats

from .array_model import ArrayConfig, PatternCurve, alpha, sample_realization
from .errors import DegenerateDistributionError, DomainError, NumericError
from .montecarlo import IMPAIRMENT_STREAM, mean_and_stderr, run_trials, stream_rng
from .specfun import (
    QuadratureSpec,
    RealOrArray,
    bessel_i_ratio,
    hyp1f2_angle,
    hyp1f2_radial,
    integrate_panels,
    j1_ratio,
    map_scalar,
    oscillation_panels,
)

logger = logging.getLogger(__name__)

Scenario = Literal["closed", "open"]
ApproxWeighting = Literal["mirrored", "window"]

# the radial pdf is integrated with a log substitution below this fraction of r_max
LOG_SPLIT_FRACTION = 0.01
_LOG_TAIL_END = 60.0


@dataclass(frozen=True)
class ClosedLoopParams:
    """Phase-locked-loop quality.

    Attributes:
        loop_snr (float): loop SNR rho, the inverse of the phase-noise variance.
    """

    loop_snr: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.loop_snr) and self.loop_snr > 0):
            raise DomainError("loop_snr must be finite and strictly positive")

    @property
    def sigma2_phi(self) -> float:
        return 1.0 / self.loop_snr

    @classmethod
    def from_sigma2(cls, sigma2_phi: float) -> "ClosedLoopParams":
        if not sigma2_phi > 0:
            raise DomainError("sigma2_phi must be strictly positive")
        return cls(loop_snr=1.0 / sigma2_phi)


@dataclass(frozen=True)
class OpenLoopParams:
    """Location-estimation error bounds.

    Attributes:
        rmax_over_lambda (float): radial error bound r_max / lambda.
        psi_max (float): angular error bound in radians.
    """

    rmax_over_lambda: float
    psi_max: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rmax_over_lambda) and self.rmax_over_lambda >= 0):
            raise DomainError("rmax_over_lambda must be finite and non-negative")
        if not (0.0 <= self.psi_max <= math.pi):
            raise DomainError("psi_max must lie in [0, pi]")


ImpairmentParams = Union[ClosedLoopParams, OpenLoopParams]


def tikhonov_pdf(x: ArrayLike, p: ClosedLoopParams) -> RealOrArray:
    """Tikhonov density exp(rho cos x) / (2 pi I0(rho)) on [-pi, pi].

    Written as exp(rho (cos x - 1)) / (2 pi i0e(rho)) so large loop SNRs do not overflow.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > math.pi):
        raise DomainError("Phase offsets must lie in [-pi, pi]")
    rho = p.loop_snr
    value = np.exp(rho * (np.cos(arr) - 1.0)) / (2.0 * math.pi * special.i0e(rho))
    return float(value) if value.ndim == 0 else value


def sample_tikhonov(
    p: ClosedLoopParams,
    rng: np.random.Generator,
    size: Optional[Union[int, Tuple[int, ...]]] = None,
) -> Union[float, NDArray[np.float64]]:
    """Draws Tikhonov phase offsets; the law is von Mises with concentration rho."""
    return stats.vonmises.rvs(kappa=p.loop_snr, size=size, random_state=rng)


def attenuation_phase(p: ClosedLoopParams) -> float:
    """Mainbeam attenuation A = I1(rho) / I0(rho) of closed-loop phase jitter."""
    return float(bessel_i_ratio(p.loop_snr))


def avg_pattern_closed_loop(
    n_nodes: int, r_tilde: float, phi: ArrayLike, p: ClosedLoopParams
) -> RealOrArray:
    if n_nodes < 1:
        raise DomainError("n_nodes must be at least 1")
    inv_n = 1.0 / n_nodes
    shape = np.square(j1_ratio(alpha(phi, r_tilde)))
    return inv_n + (1.0 - inv_n) * shape * attenuation_phase(p) ** 2


def radial_error_pdf(v: ArrayLike, p: OpenLoopParams) -> RealOrArray:
    """Density of the projected radial error v = dr cos(theta).

    (1 / (pi r)) [ln(1 + sqrt(1 - (v / r)^2)) - ln(|v| / r)] on |v| <= r, zero
    outside, with an integrable singularity at v = 0.

    Args:
        v (ArrayLike): projected error(s) in wavelengths.
        p (OpenLoopParams): error bounds.

    Returns:
        RealOrArray: density values; +inf at v = 0.

    Raises:
        DegenerateDistributionError: r_max = 0, where the error is a point mass.
    """
    r = p.rmax_over_lambda
    if r == 0.0:
        raise DegenerateDistributionError("The radial error is a point mass at r_max = 0")
    ratio = np.abs(np.asarray(v, dtype=float)) / r
    inside = ratio <= 1.0
    safe = np.where(inside, ratio, 1.0)
    with np.errstate(divide="ignore"):
        density = (np.log1p(np.sqrt(1.0 - safe * safe)) - np.log(safe)) / (math.pi * r)
    value = np.where(inside, density, 0.0)
    return float(value) if value.ndim == 0 else value


def radial_error_mass(p: OpenLoopParams, quad: Optional[QuadratureSpec] = None) -> float:
    """Integral of radial_error_pdf over [-r_max, r_max].

    The inner piece |v| < r_max / 100 is integrated in t = -ln(|v| / r_max),
    which turns the logarithmic singularity into an exponentially decaying tail.
    """
    r = p.rmax_over_lambda
    split = LOG_SPLIT_FRACTION * r

    def substituted(t: float) -> float:
        v = r * math.exp(-t)
        return float(radial_error_pdf(v, p)) * v

    inner = integrate_panels(substituted, -math.log(LOG_SPLIT_FRACTION), _LOG_TAIL_END, quad)
    outer = integrate_panels(lambda v: float(radial_error_pdf(v, p)), split, r, quad)
    return 2.0 * (inner + outer)


def sample_radial_error(
    p: OpenLoopParams, rng: np.random.Generator, size: int
) -> NDArray[np.float64]:
    """Samples v = dr cos(theta) with dr uniform on [-r_max, r_max] and theta uniform."""
    r = p.rmax_over_lambda
    dr = rng.uniform(-r, r, size)
    theta = rng.uniform(-math.pi, math.pi, size)
    return dr * np.cos(theta)


def attenuation_radial(
    p: OpenLoopParams, quad: Optional[QuadratureSpec] = None
) -> float:
    """Attenuation E exp(j 2 pi v / lambda) of radial location errors."""
    return float(hyp1f2_radial(math.pi * p.rmax_over_lambda, quad))


@functools.lru_cache(maxsize=8)
def radial_half_power_error(quad: Optional[QuadratureSpec] = None) -> float:
    """r_max / lambda at which |A_r|^2 falls to 1/2."""

    def excess(r: float) -> float:
        return attenuation_radial(OpenLoopParams(r, 0.0), quad) ** 2 - 0.5

    try:
        return float(optimize.brentq(excess, 0.0, 0.5, xtol=1e-12))
    except ValueError as e:
        raise NumericError(f"Half-power bracket failed: {e}") from e


def attenuation_angle(
    phi: ArrayLike,
    p: OpenLoopParams,
    r_tilde: float,
    quad: Optional[QuadratureSpec] = None,
) -> RealOrArray:
    """Angular-error factor: mean of 2J1(a)/a with a = 4 pi R sin((phi - d) / 2), d uniform on [-psi_max, psi_max].

    Args:
        phi (ArrayLike): look angle(s) in [-pi, pi].
        p (OpenLoopParams): error bounds.
        r_tilde (float): normalized disk radius.
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        RealOrArray: factor in [-1, 1].
    """
    psi = p.psi_max
    if psi == 0.0:
        return j1_ratio(alpha(phi, r_tilde))
    scale = 4.0 * math.pi * r_tilde
    panels = oscillation_panels(scale * psi)

    def one(angle: float) -> float:
        if abs(angle) > math.pi:
            raise DomainError("Look angles must lie in [-pi, pi]")

        def integrand(d: float) -> float:
            return float(j1_ratio(scale * math.sin(0.5 * (angle - d))))

        return integrate_panels(integrand, -psi, psi, quad, panels) / (2.0 * psi)

    return map_scalar(one, phi)


def apsi_mainbeam_approx(
    phi: ArrayLike,
    p: OpenLoopParams,
    r_tilde: float,
    weighting: ApproxWeighting = "mirrored",
    quad: Optional[QuadratureSpec] = None,
) -> RealOrArray:
    """Small-angle two-term form of the angular-error factor.

    With F(x) = 1F2(1/2; 3/2, 2; -x^2) and x_pm = pi R (phi +- psi_max):
      "mirrored": (1/2)(1 - phi/psi_max) F(x_+) + (1/2)(1 + phi/psi_max) F(x_-), equal to 1 at phi = +-psi_max.
      "window": (1/2)(1 + phi/psi_max) F(x_+) + (1/2)(1 - phi/psi_max) F(x_-), the exact mean of
      2J1(2 pi R s)/(2 pi R s) over s in [phi - psi_max, phi + psi_max].
    Both agree at phi = 0. Meant for |phi| <= 4 psi_max.

    The "mirrored" weights leave [0, 1] once |phi| > psi_max, so that form
    overshoots 1 just beyond psi_max (its square reaches about 1.19 at
    R psi_max = 0.4) and is not an attenuation there. Its off-axis maxima
    belong to the two-term form only; attenuation_angle and the Monte Carlo
    pattern both peak at phi = 0. The "window" form stays within [-1, 1].
    """
    psi = p.psi_max
    if psi == 0.0:
        return j1_ratio(alpha(phi, r_tilde))
    if weighting not in ("mirrored", "window"):
        raise DomainError(f"Unknown weighting {weighting!r}")
    arr = np.asarray(phi, dtype=float)
    plus = np.asarray(hyp1f2_angle(np.abs(math.pi * r_tilde * (arr + psi)), quad))
    minus = np.asarray(hyp1f2_angle(np.abs(math.pi * r_tilde * (arr - psi)), quad))
    lean = arr / psi
    if weighting == "mirrored":
        value = 0.5 * (1.0 - lean) * plus + 0.5 * (1.0 + lean) * minus
    else:
        value = 0.5 * (1.0 + lean) * plus + 0.5 * (1.0 - lean) * minus
    return float(value) if value.ndim == 0 else value


def avg_pattern_open_loop(
    n_nodes: int,
    r_tilde: float,
    phi: ArrayLike,
    p: OpenLoopParams,
    quad: Optional[QuadratureSpec] = None,
) -> RealOrArray:
    """Average pattern 1/N + (1 - 1/N) |A_psi(phi)|^2 |A_r|^2 under location errors."""
    if n_nodes < 1:
        raise DomainError("n_nodes must be at least 1")
    inv_n = 1.0 / n_nodes
    angle_factor = np.square(attenuation_angle(phi, p, r_tilde, quad))
    return inv_n + (1.0 - inv_n) * angle_factor * attenuation_radial(p, quad) ** 2


def _open_loop_phase(
    radii: NDArray[np.float64],
    angles: NDArray[np.float64],
    grid: NDArray[np.float64],
    r_tilde: float,
    radial_error: NDArray[np.float64],
    angle_error: NDArray[np.float64],
) -> NDArray[np.float64]:
    # true path phase towards phi minus the phase preset from the estimated position
    estimated = angles + angle_error
    true_term = np.cos(grid[:, None] - angles[None, :])
    preset_term = np.cos(estimated)[None, :]
    return (
        2.0 * math.pi * r_tilde * radii[None, :] * (true_term - preset_term)
        - 2.0 * math.pi * (radial_error * np.cos(estimated))[None, :]
    )


def mc_impaired_pattern(
    cfg: ArrayConfig,
    grid: ArrayLike,
    scenario: Scenario,
    params: ImpairmentParams,
    n_trials: int,
    workers: Optional[int] = None,
) -> PatternCurve:
    """Monte Carlo mean pattern with per-node phase impairments.

    Node positions come from the trial's position stream and the impairments
    from its own stream, so impaired and unimpaired runs share geometry.

    Args:
        cfg (ArrayConfig): experiment identity.
        grid (ArrayLike): look angles in [-pi, pi].
        scenario (Scenario): "closed" for Tikhonov jitter, "open" for location errors.
        params (ImpairmentParams): parameters matching the scenario.
        n_trials (int): number of realizations, at least 100.
        workers (Optional[int]): worker threads.

    Returns:
        PatternCurve: mean pattern with standard errors.
    """
    if n_trials < 100:
        raise DomainError("mc_impaired_pattern needs at least 100 trials")
    phi = np.asarray(grid, dtype=float).ravel()
    if np.any(np.abs(phi) > math.pi):
        raise DomainError("Look angles must lie in [-pi, pi]")
    n = cfg.n_nodes

    if scenario == "closed":
        if not isinstance(params, ClosedLoopParams):
            raise DomainError("The closed-loop scenario needs ClosedLoopParams")
        closed = params

        def trial(index: int) -> NDArray[np.float64]:
            real = sample_realization(cfg, index)
            offsets = np.atleast_1d(sample_tikhonov(closed, stream_rng(cfg.seed, index, IMPAIRMENT_STREAM), n))
            scale = 4.0 * math.pi * cfg.r_tilde * np.sin(0.5 * phi)
            z = real.radii[None, :] * np.sin(real.angles[None, :] - 0.5 * phi[:, None])
            factor = np.exp(-1j * (scale[:, None] * z + offsets[None, :])).mean(axis=1)
            return np.abs(factor) ** 2

    elif scenario == "open":
        if not isinstance(params, OpenLoopParams):
            raise DomainError("The open-loop scenario needs OpenLoopParams")
        opened = params

        def trial(index: int) -> NDArray[np.float64]:
            real = sample_realization(cfg, index)
            rng = stream_rng(cfg.seed, index, IMPAIRMENT_STREAM)
            radial_error = rng.uniform(-opened.rmax_over_lambda, opened.rmax_over_lambda, n)
            angle_error = rng.uniform(-opened.psi_max, opened.psi_max, n)
            phase = _open_loop_phase(real.radii, real.angles, phi, cfg.r_tilde, radial_error, angle_error)
            return np.abs(np.exp(-1j * phase).mean(axis=1)) ** 2

    else:
        raise DomainError(f"Unknown scenario {scenario!r}")

    samples = run_trials(n_trials, trial, workers)
    mean, stderr = mean_and_stderr(samples)
    logger.debug("%s-loop pattern over %d angles from %d trials", scenario, phi.size, n_trials)
    return PatternCurve(angles=phi, power=mean, label=f"monte-carlo-{scenario}", std_errors=stderr)
