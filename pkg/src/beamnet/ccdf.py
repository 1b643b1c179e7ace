"""Distribution of the beampattern at a fixed look angle.

The real and imaginary parts of N times the array factor, X and Y, are sums
of N i.i.d. terms cos(alpha z) and sin(alpha z). Their joint density follows
from the N-th power of one term's characteristic function, inverted on a
grid with the 2-D FFT; the Gaussian family approximates the same law by its
first two moments.
"""

import logging
import math
import warnings
import numpy as np

from dataclasses import dataclass, field
from typing import Literal, Optional, Tuple
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, interpolate, special

from .array_model import ArrayConfig, alpha as alpha_of, array_factor, sample_realization
from .average_pattern import sidelobe_region
from .errors import DomainError, NumericError, RegionError, ResolutionError
from .montecarlo import run_trials
from .specfun import (
    QuadratureSpec,
    integrate_panels,
    j1_ratio,
    marcum_q1,
    oscillation_panels,
)

logger = logging.getLogger(__name__)

CcdfMethod = Literal["exact-cf", "precise-gaussian", "marcum", "rayleigh", "monte-carlo"]

DEFAULT_GRID_SIZE = 1024
MIN_GRID_SIZE = 256
# density support is padded by this fraction of N on each side
SUPPORT_PADDING = 0.125
ALIASING_TOLERANCE = 1e-6
MAX_CF_NODES = 8192


@dataclass(frozen=True)
class GaussianMoments:
    """Moments of the Gaussian approximation of (X, Y) scaled by 1/sqrt(N).

    Attributes:
        m_x (float): mean of X; Y has zero mean.
        var_x (float): variance of X.
        var_y (float): variance of Y.
        alpha (float): phase scale at which the moments were computed.
        n_nodes (int): number of nodes.
    """

    m_x: float
    var_x: float
    var_y: float
    alpha: float
    n_nodes: int

    @property
    def mean_power(self) -> float:
        """N times the average pattern at the look angle."""
        return self.m_x**2 + self.var_x + self.var_y


@dataclass
class CcdfCurve:
    """Exceedance probabilities Pr(P > P0) over a threshold grid.

    Attributes:
        thresholds (NDArray[np.float64]): linear power thresholds P0.
        probs (NDArray[np.float64]): exceedance probabilities.
        method (CcdfMethod): how the curve was produced.
        std_errors (Optional[NDArray[np.float64]]): binomial standard errors of Monte Carlo curves.
    """

    thresholds: NDArray[np.float64]
    probs: NDArray[np.float64]
    method: CcdfMethod
    std_errors: Optional[NDArray[np.float64]] = field(default=None)

    def to_db_thresholds(self, n_nodes: Optional[int] = None) -> NDArray[np.float64]:
        """Thresholds in dB, normalized by 1/N when n_nodes is given."""
        scale = 1.0 if n_nodes is None else float(n_nodes)
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(scale * self.thresholds)


@dataclass
class ExactDensity:
    """Joint density of (X, Y) on a square grid.

    Attributes:
        axis (NDArray[np.float64]): grid coordinates shared by both axes.
        density (NDArray[np.float64]): density values, indexed [x, y].
        spacing (float): grid step.
        n_nodes (int): number of nodes; the true support is [-N, N]^2.
    """

    axis: NDArray[np.float64]
    density: NDArray[np.float64]
    spacing: float
    n_nodes: int

    def total_mass(self) -> float:
        return float(self.density.sum() * self.spacing**2)

    def mass_outside_support(self) -> float:
        outside = np.abs(self.axis) > self.n_nodes
        mask = outside[:, None] | outside[None, :]
        return float(np.abs(self.density[mask]).sum() * self.spacing**2)


def as_thresholds(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("Thresholds must be a 1-D list of finite non-negative powers")
    return arr


def _step_curve(thresholds: NDArray[np.float64], method: CcdfMethod) -> CcdfCurve:
    # alpha = 0: every realization has P = 1
    probs = (thresholds < 1.0).astype(float)
    return CcdfCurve(thresholds=thresholds, probs=probs, method=method)


def joint_cf(
    omega: float, nu: float, alpha: float, quad: Optional[QuadratureSpec] = None
) -> complex:
    """Characteristic function E exp(j (omega cos(alpha z) + nu sin(alpha z))) of one node.

    z has the semicircle density (2/pi) sqrt(1 - z^2); with z = cos t the
    expectation becomes an integral over t in [0, pi] with weight (2/pi) sin^2 t.

    Args:
        omega (float): frequency conjugate to the real part.
        nu (float): frequency conjugate to the imaginary part.
        alpha (float): phase scale.
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        complex: value with modulus at most 1.
    """
    if not all(math.isfinite(v) for v in (omega, nu, alpha)):
        raise DomainError("joint_cf requires finite arguments")
    if alpha == 0.0:
        return complex(math.cos(omega), math.sin(omega))

    def phase(t: float) -> float:
        arg = alpha * math.cos(t)
        return omega * math.cos(arg) + nu * math.sin(arg)

    def weight(t: float) -> float:
        return 2.0 / math.pi * math.sin(t) ** 2

    span = (1.0 + math.hypot(omega, nu)) * abs(alpha)
    panels = oscillation_panels(span)
    real = integrate_panels(lambda t: weight(t) * math.cos(phase(t)), 0.0, math.pi, quad, panels)
    imag = integrate_panels(lambda t: weight(t) * math.sin(phase(t)), 0.0, math.pi, quad, panels)
    return complex(real, imag)


def _cf_nodes(alpha: float, rho_max: float) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    count = min(MAX_CF_NODES, int(rho_max * abs(alpha)) + 64)
    x, w = np.polynomial.legendre.leggauss(count)
    t = 0.5 * math.pi * (x + 1.0)
    # (pi / 2) from the interval map times the (2 / pi) sin^2 t weight
    return t, w * np.sin(t) ** 2


def joint_cf_grid(
    omega: ArrayLike, nu: ArrayLike, alpha: float
) -> NDArray[np.complex128]:
    """Characteristic function of one node on the outer grid omega x nu.

    Gauss-Legendre nodes in t turn the expectation into one complex matrix
    product A @ B.T with A[i, k] = w_k exp(j omega_i cos(alpha cos t_k)) and
    B[j, k] = exp(j nu_j sin(alpha cos t_k)).

    Args:
        omega (ArrayLike): frequencies conjugate to the real part.
        nu (ArrayLike): frequencies conjugate to the imaginary part.
        alpha (float): phase scale.

    Returns:
        NDArray[np.complex128]: array of shape (len(omega), len(nu)).
    """
    om = np.asarray(omega, dtype=float).ravel()
    nv = np.asarray(nu, dtype=float).ravel()
    rho_max = math.hypot(float(np.max(np.abs(om))), float(np.max(np.abs(nv))))
    t, w = _cf_nodes(alpha, rho_max)
    arg = alpha * np.cos(t)
    a = w[None, :] * np.exp(1j * om[:, None] * np.cos(arg)[None, :])
    b = np.exp(1j * nv[:, None] * np.sin(arg)[None, :])
    logger.debug("characteristic-function grid %dx%d with %d nodes", om.size, nv.size, t.size)
    return a @ b.T


def exact_density(
    n_nodes: int, alpha: float, grid_size: int = DEFAULT_GRID_SIZE
) -> ExactDensity:
    """Joint density of (X, Y) by 2-D FFT inversion of the N-th power of the characteristic function.

    Args:
        n_nodes (int): number of nodes.
        alpha (float): phase scale, non-zero.
        grid_size (int): power of two, at least 256.

    Returns:
        ExactDensity: density sampled on [-L, L)^2 with L = N (1 + 1/8).

    Raises:
        ResolutionError: the density leaks more than 1e-6 of its mass outside [-N, N]^2.
    """
    if grid_size < MIN_GRID_SIZE or grid_size & (grid_size - 1):
        raise DomainError(f"grid_size must be a power of two >= {MIN_GRID_SIZE}")
    if n_nodes < 1:
        raise DomainError("n_nodes must be at least 1")
    if alpha == 0.0:
        raise DomainError("The density is a point mass at alpha = 0")
    half_width = n_nodes * (1.0 + SUPPORT_PADDING)
    d_omega = math.pi / half_width
    index = np.arange(grid_size) - grid_size // 2
    omega = index * d_omega
    spacing = 2.0 * half_width / grid_size
    axis = index * spacing

    cf = joint_cf_grid(omega, omega, abs(alpha)) ** n_nodes
    density = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(cf))).real
    density *= (d_omega / (2.0 * math.pi)) ** 2

    result = ExactDensity(axis=axis, density=density, spacing=spacing, n_nodes=n_nodes)
    leaked = result.mass_outside_support()
    logger.debug("exact density N=%d grid=%d leaked mass %.3e", n_nodes, grid_size, leaked)
    if leaked > ALIASING_TOLERANCE:
        raise ResolutionError(
            f"Density leaks {leaked:.3e} of its mass outside [-N, N]^2; increase grid_size beyond {grid_size}",
            residual=leaked,
        )
    return result


def _radial_mass(dens: ExactDensity) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    n = dens.n_nodes
    grid_size = dens.axis.size
    radii = np.linspace(0.0, float(n), grid_size // 2 + 1)
    n_angles = max(256, math.ceil(2.0 * math.pi * n / dens.spacing))
    angles = 2.0 * math.pi * np.arange(n_angles) / n_angles
    interp = interpolate.RegularGridInterpolator(
        (dens.axis, dens.axis),
        np.clip(dens.density, 0.0, None),
        method="linear",
        bounds_error=False,
        fill_value=0.0,
    )
    xs = radii[:, None] * np.cos(angles)[None, :]
    ys = radii[:, None] * np.sin(angles)[None, :]
    ring = interp(np.stack([xs.ravel(), ys.ravel()], axis=-1)).reshape(xs.shape)
    radial_density = radii * ring.mean(axis=1) * 2.0 * math.pi
    return radii, integrate.cumulative_trapezoid(radial_density, radii, initial=0.0)


def exact_ccdf(
    n_nodes: int,
    alpha: float,
    thresholds: ArrayLike,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> CcdfCurve:
    """CCDF of the beampattern from the inverted joint density.

    The density is resampled on circles and accumulated radially; the
    exceedance of P0 is the mass outside the radius N sqrt(P0).

    Args:
        n_nodes (int): number of nodes.
        alpha (float): phase scale at the look angle.
        thresholds (ArrayLike): linear power thresholds.
        grid_size (int): FFT grid size, a power of two >= 256.

    Returns:
        CcdfCurve: method "exact-cf".
    """
    p0 = as_thresholds(thresholds)
    if alpha == 0.0 or n_nodes == 1:
        return _step_curve(p0, "exact-cf")
    dens = exact_density(n_nodes, alpha, grid_size)
    radii, inner = _radial_mass(dens)
    total = inner[-1]
    if total <= 0.0:
        raise NumericError("Radial integration of the density returned no mass")
    radius = n_nodes * np.sqrt(np.minimum(p0, 1.0))
    outer = (total - np.interp(radius, radii, inner)) / total
    probs = np.where(p0 > 1.0, 0.0, np.clip(outer, 0.0, 1.0))
    return CcdfCurve(thresholds=p0, probs=probs, method="exact-cf")


def gaussian_moments(n_nodes: int, alpha: float) -> GaussianMoments:
    """Moments of the Gaussian approximation at phase scale alpha.

    Args:
        n_nodes (int): number of nodes.
        alpha (float): phase scale, non-negative.

    Returns:
        GaussianMoments: m_x = sqrt(N) 2J1(a)/a, var_x = (1 + J1(2a)/a)/2 - (2J1(a)/a)^2, var_y = (1 - J1(2a)/a)/2.
    """
    if not (math.isfinite(alpha) and alpha >= 0.0):
        raise DomainError("gaussian_moments requires a finite non-negative alpha")
    if alpha == 0.0:
        return GaussianMoments(
            m_x=math.sqrt(n_nodes), var_x=0.0, var_y=0.0, alpha=0.0, n_nodes=n_nodes
        )
    ratio = float(j1_ratio(alpha))
    double_ratio = float(j1_ratio(2.0 * alpha))
    return GaussianMoments(
        m_x=math.sqrt(n_nodes) * ratio,
        var_x=0.5 * (1.0 + double_ratio) - ratio * ratio,
        var_y=0.5 * (1.0 - double_ratio),
        alpha=alpha,
        n_nodes=n_nodes,
    )


def ccdf_precise_gaussian(
    mom: GaussianMoments,
    thresholds: ArrayLike,
    quad: Optional[QuadratureSpec] = None,
) -> CcdfCurve:
    """CCDF of |X + jY|^2 / N for Gaussian X, Y with unequal variances.

    In polar coordinates the radial integral is closed-form, leaving one
    integral over the angle; the exponent V^2 - m^2 / (2 var_x) is never
    positive, so the integrand is evaluated as is.

    Args:
        mom (GaussianMoments): moments with both variances positive.
        thresholds (ArrayLike): linear power thresholds.
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        CcdfCurve: method "precise-gaussian".
    """
    if mom.var_x <= 0.0 or mom.var_y <= 0.0:
        raise DomainError("The precise Gaussian CCDF needs both variances strictly positive")
    p0 = as_thresholds(thresholds)
    m = mom.m_x
    sx, sy = math.sqrt(mom.var_x), math.sqrt(mom.var_y)
    offset = m * m / (2.0 * mom.var_x)

    def tail(w: float) -> float:
        def integrand(omega: float) -> float:
            c, s = math.cos(omega), math.sin(omega)
            u = math.sqrt(c * c / (2.0 * mom.var_x) + s * s / (2.0 * mom.var_y))
            v = m * c / (2.0 * mom.var_x * u)
            gap = w * u - v
            bracket = math.sqrt(math.pi) * v * special.erfc(gap) + math.exp(-gap * gap)
            return math.exp(v * v - offset) * bracket / (4.0 * math.pi * sx * sy * u * u)

        # even in omega; the peak sits at omega = 0, on a panel edge
        return 2.0 * integrate_panels(integrand, 0.0, math.pi, quad, panels=2)

    probs = np.clip(np.array([tail(math.sqrt(mom.n_nodes * p)) for p in p0]), 0.0, 1.0)
    return CcdfCurve(thresholds=p0, probs=probs, method="precise-gaussian")


def ccdf_marcum(mom: GaussianMoments, thresholds: ArrayLike) -> CcdfCurve:
    """Equal-variance approximation Q1(sqrt(2) m_x, sqrt(2 N P0))."""
    p0 = as_thresholds(thresholds)
    probs = np.asarray(
        marcum_q1(math.sqrt(2.0) * abs(mom.m_x), np.sqrt(2.0 * mom.n_nodes * p0)),
        dtype=float,
    )
    return CcdfCurve(thresholds=p0, probs=np.atleast_1d(probs), method="marcum")


def ccdf_rayleigh(n_nodes: int, thresholds: ArrayLike) -> CcdfCurve:
    """Zero-mean approximation exp(-N P0)."""
    p0 = as_thresholds(thresholds)
    return CcdfCurve(thresholds=p0, probs=np.exp(-n_nodes * p0), method="rayleigh")


def mc_ccdf(
    cfg: ArrayConfig,
    phi: float,
    thresholds: ArrayLike,
    n_trials: int,
    workers: Optional[int] = None,
) -> CcdfCurve:
    """Empirical CCDF of the pattern at one look angle.

    Args:
        cfg (ArrayConfig): experiment identity.
        phi (float): look angle in radians.
        thresholds (ArrayLike): linear power thresholds.
        n_trials (int): number of realizations, at least 100.
        workers (Optional[int]): worker threads.

    Returns:
        CcdfCurve: method "monte-carlo" with binomial standard errors.
    """
    if n_trials < 100:
        raise DomainError("mc_ccdf needs at least 100 trials")
    p0 = as_thresholds(thresholds)

    def trial(index: int) -> float:
        return abs(array_factor(sample_realization(cfg, index), phi, cfg.r_tilde)) ** 2

    powers = run_trials(n_trials, trial, workers)
    probs = (powers[:, None] > p0[None, :]).mean(axis=0)
    std_errors = np.sqrt(probs * (1.0 - probs) / n_trials)
    return CcdfCurve(thresholds=p0, probs=probs, method="monte-carlo", std_errors=std_errors)


def zero_mean_limit(n_nodes: int) -> float:
    """Upper limit 1 / (1 - 1/N) on the squared mean inside the sidelobe region."""
    if n_nodes < 2:
        raise DomainError("The limit is defined for N >= 2")
    return 1.0 / (1.0 - 1.0 / n_nodes)


def zero_mean_bound(n_nodes: int, r_tilde: float, phi: float) -> float:
    """Squared mean N (2 J1(alpha) / alpha)^2 of X inside the 3 dB sidelobe region.

    Args:
        n_nodes (int): number of nodes.
        r_tilde (float): normalized disk radius.
        phi (float): look angle in radians.

    Returns:
        float: |E X|^2; a warning is emitted when it exceeds 1 / (1 - 1/N).

    Raises:
        RegionError: phi lies outside the sidelobe region.
    """
    region = sidelobe_region(n_nodes, r_tilde)
    if not region.contains(phi):
        raise RegionError(
            f"phi={phi:.6g} lies outside the 3 dB sidelobe region |phi| >= {region.phi_zero:.6g}"
        )
    value = n_nodes * float(j1_ratio(alpha_of(phi, r_tilde))) ** 2
    limit = zero_mean_limit(n_nodes)
    if value > limit:
        warnings.warn(
            f"Squared mean {value:.6g} exceeds {limit:.6g} at phi={phi:.6g}; "
            "the region edge comes from the asymptotic peak formula"
        )
    return value
