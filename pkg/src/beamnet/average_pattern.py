"""Closed-form ensemble statistics of the random-array beampattern."""

import functools
import logging
import math
import numpy as np

from dataclasses import dataclass
from typing import Union
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special

from .array_model import DB_FLOOR, alpha, power_to_db
from .errors import DomainError, EmptyRegionError, NumericError, OutOfVisibleRegionError
from .specfun import RealOrArray, j1_ratio

logger = logging.getLogger(__name__)

# rounded value of the beamwidth constant, used for the visible-region check only
BEAMWIDTH_CONSTANT_ROUNDED = 0.1286
ROOT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SidelobeRegion:
    """Angles { phi : phi_zero <= |phi| <= pi } where the average sidelobe peaks stay within 3 dB of 1/N.

    Attributes:
        n0 (int): index of the first compliant peak.
        phi_zero (float): angle of the n0-th zero, in radians.
        r_tilde (float): normalized disk radius.
        n_nodes (int): number of nodes.
    """

    n0: int
    phi_zero: float
    r_tilde: float
    n_nodes: int

    def contains(self, phi: ArrayLike) -> Union[bool, NDArray[np.bool_]]:
        arr = np.abs(np.asarray(phi, dtype=float))
        inside = (arr >= self.phi_zero) & (arr <= math.pi)
        return bool(inside) if inside.ndim == 0 else inside


def average_pattern(n_nodes: int, r_tilde: float, phi: ArrayLike) -> RealOrArray:
    """Average beampattern 1/N + (1 - 1/N) |2 J1(alpha) / alpha|^2.

    Args:
        n_nodes (int): number of nodes.
        r_tilde (float): normalized disk radius.
        phi (ArrayLike): look angle(s) in [-pi, pi].

    Returns:
        RealOrArray: values in [1/N, 1], equal to 1 at phi = 0.

    Raises:
        DomainError: n_nodes below 1.
    """
    if n_nodes < 1:
        raise DomainError("n_nodes must be at least 1")
    inv_n = 1.0 / n_nodes
    return inv_n + (1.0 - inv_n) * np.square(j1_ratio(alpha(phi, r_tilde)))


def average_pattern_db(
    n_nodes: int, r_tilde: float, phi: ArrayLike, floor_db: float = DB_FLOOR
) -> RealOrArray:
    db = power_to_db(average_pattern(n_nodes, r_tilde, phi), floor_db)
    return float(db) if db.ndim == 0 else db


def peak_value(n: int, n_nodes: int) -> float:
    """Asymptotic value of the n-th peak of the average pattern, independent of R."""
    if n < 1:
        raise DomainError("Peak index must be at least 1")
    inv_n = 1.0 / n_nodes
    envelope = (2.0 / (math.pi * (n - 0.25))) ** 3 / math.pi
    return inv_n + (1.0 - inv_n) * envelope


def _lobe_angle(offset: float, r_tilde: float) -> float:
    argument = offset / (4.0 * r_tilde)
    if argument > 1.0:
        raise OutOfVisibleRegionError(
            f"Lobe at offset {offset:g} is not visible for r_tilde={r_tilde:g}"
        )
    return 2.0 * math.asin(argument)


def peak_angle(n: int, r_tilde: float) -> float:
    """Angle 2 arcsin((n - 1/4) / (4R)) of the n-th average-pattern peak."""
    if n < 1:
        raise DomainError("Peak index must be at least 1")
    return _lobe_angle(n - 0.25, r_tilde)


def zero_angle(n: int, r_tilde: float) -> float:
    """Angle 2 arcsin((n + 1/4) / (4R)) of the n-th average-pattern zero."""
    if n < 1:
        raise DomainError("Zero index must be at least 1")
    return _lobe_angle(n + 0.25, r_tilde)


def peak_value_exact(n: int, n_nodes: int, r_tilde: float) -> float:
    """Average pattern evaluated at the asymptotic n-th peak angle."""
    return float(average_pattern(n_nodes, r_tilde, peak_angle(n, r_tilde)))


@functools.lru_cache(maxsize=1)
def beamwidth_constant() -> float:
    """Re-derives the half-power constant u with |2 J1(4 pi u) / (4 pi u)|^2 = 1/2.

    The bracket ends at the first zero of J1 scaled by 4 pi, where the
    mainlobe of the large-N average pattern ends.

    Returns:
        float: u such that the 3 dB beamwidth is 2 arcsin(u / R); about 0.1286.
    """

    def excess(u: float) -> float:
        return float(j1_ratio(4.0 * math.pi * u)) ** 2 - 0.5

    first_zero = float(special.jn_zeros(1, 1)[0]) / (4.0 * math.pi)
    try:
        root = optimize.bisect(excess, 0.0, first_zero, xtol=ROOT_TOLERANCE)
    except ValueError as e:
        raise NumericError(f"Half-power bracket failed: {e}") from e
    logger.debug("beamwidth constant re-derived as %.10f", root)
    return float(root)


def beamwidth_3db(r_tilde: float) -> float:
    """3 dB beamwidth 2 arcsin(u / R) of the average pattern for large N.

    Normalized radii between the rounded constant and the re-derived one
    saturate at pi.

    Args:
        r_tilde (float): normalized disk radius.

    Returns:
        float: beamwidth in radians.

    Raises:
        OutOfVisibleRegionError: r_tilde is below the half-power constant, so no 3 dB crossing exists.
    """
    if r_tilde < BEAMWIDTH_CONSTANT_ROUNDED:
        raise OutOfVisibleRegionError(
            f"No 3 dB crossing for r_tilde={r_tilde:g} < {BEAMWIDTH_CONSTANT_ROUNDED}"
        )
    return 2.0 * math.asin(min(1.0, beamwidth_constant() / r_tilde))


def first_compliant_peak_bound(n_nodes: int) -> int:
    """Analytic lower bound ceil(1/4 + (2/pi) ((N - 1) / pi)^(1/3)) on n0."""
    return math.ceil(0.25 + (2.0 / math.pi) * ((n_nodes - 1) / math.pi) ** (1.0 / 3.0))


def sidelobe_region(n_nodes: int, r_tilde: float) -> SidelobeRegion:
    """Builds the 3 dB sidelobe region from the asymptotic peak formula.

    Args:
        n_nodes (int): number of nodes, at least 2.
        r_tilde (float): normalized disk radius.

    Returns:
        SidelobeRegion: first compliant peak and the zero angle where the region starts.

    Raises:
        EmptyRegionError: N < 2, or the zero after the first compliant peak is not visible.
    """
    if n_nodes < 2:
        raise EmptyRegionError("A single node has an isotropic pattern and no sidelobes")
    n0 = max(1, first_compliant_peak_bound(n_nodes))
    while n_nodes * peak_value(n0, n_nodes) > 2.0:
        n0 += 1
    try:
        phi_zero = zero_angle(n0, r_tilde)
    except OutOfVisibleRegionError as e:
        raise EmptyRegionError(
            f"3 dB sidelobe region is empty for N={n_nodes}, r_tilde={r_tilde:g}"
        ) from e
    logger.debug("sidelobe region N=%d r_tilde=%g: n0=%d phi_zero=%.6f", n_nodes, r_tilde, n0, phi_zero)
    return SidelobeRegion(n0=n0, phi_zero=phi_zero, r_tilde=r_tilde, n_nodes=n_nodes)
