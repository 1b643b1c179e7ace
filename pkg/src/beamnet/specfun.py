"""Special functions and quadrature shared by every analytic formula.

Bessel and error functions come from ``scipy.special``; the generalized
hypergeometric values that appear in the directivity and impairment formulas
are evaluated through their integral representations with panelled adaptive
quadrature, which stays stable for large arguments where the ascending series
does not.
"""

import logging
import math
import numpy as np

from dataclasses import dataclass
from typing import Callable, Optional, Union
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, special, stats

from .errors import DomainError, NumericError

logger = logging.getLogger(__name__)

RealOrArray = Union[float, NDArray[np.float64]]

# below this |x| the two-term series is exact to double precision
J1_RATIO_SERIES_CUTOFF = 1e-3


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive quadrature.

    Attributes:
        abs_tol (float): absolute tolerance per panel.
        rel_tol (float): relative tolerance per panel.
        max_subdivisions (int): subdivision limit handed to QUADPACK per panel.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("Quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def _finish(values: ArrayLike) -> RealOrArray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return arr


def _require_finite(x: NDArray[np.float64], name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} requires finite arguments")


def _require_non_negative(x: NDArray[np.float64], name: str) -> None:
    _require_finite(x, name)
    if np.any(x < 0):
        raise DomainError(f"{name} is defined for non-negative arguments only")


def map_scalar(fn: Callable[[float], float], x: ArrayLike) -> RealOrArray:
    """Applies a scalar function elementwise, keeping scalars scalar."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    out = np.array([fn(float(v)) for v in arr.ravel()], dtype=float)
    return out.reshape(arr.shape)


def integrate_panels(
    func: Callable[[float], float],
    a: float,
    b: float,
    quad: Optional[QuadratureSpec] = None,
    panels: int = 1,
) -> float:
    """Integrates a real function over [a, b] split into equal panels.

    Each panel is handed to QUADPACK's adaptive Gauss-Kronrod routine, so
    oscillatory integrands only need enough panels to keep a handful of
    oscillations in each.

    Args:
        func (Callable[[float], float]): integrand.
        a (float): lower limit.
        b (float): upper limit.
        quad (Optional[QuadratureSpec]): tolerances.
        panels (int): number of equal panels.

    Returns:
        float: value of the integral.

    Raises:
        NumericError: a panel missed its tolerance; carries the error estimate.
    """
    quad = quad or DEFAULT_QUADRATURE
    panels = max(1, int(panels))
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    total_error = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        result = integrate.quad(
            func,
            float(lo),
            float(hi),
            epsabs=quad.abs_tol,
            epsrel=quad.rel_tol,
            limit=quad.max_subdivisions,
            full_output=1,
        )
        value, error = float(result[0]), float(result[1])
        if len(result) > 3:
            tolerance = max(quad.abs_tol, quad.rel_tol * abs(value))
            if error > tolerance:
                raise NumericError(
                    f"Quadrature on [{lo:.6g}, {hi:.6g}] did not converge: {result[3]}",
                    residual=error,
                )
        total += value
        total_error += error
    logger.debug(
        "integrated over [%g, %g] with %d panels, error estimate %.3e",
        a,
        b,
        panels,
        total_error,
    )
    return total


def bessel_j0(x: ArrayLike) -> RealOrArray:
    """Bessel function of the first kind of order zero."""
    arr = np.asarray(x, dtype=float)
    _require_finite(arr, "bessel_j0")
    return _finish(special.j0(arr))


def bessel_j1(x: ArrayLike) -> RealOrArray:
    """Bessel function of the first kind of order one."""
    arr = np.asarray(x, dtype=float)
    _require_finite(arr, "bessel_j1")
    return _finish(special.j1(arr))


def _j1_ratio_scalar(x: float) -> float:
    if abs(x) < J1_RATIO_SERIES_CUTOFF:
        x2 = x * x
        return 1.0 - x2 / 8.0 + x2 * x2 / 192.0
    return float(2.0 * special.j1(x) / x)


def j1_ratio(x: ArrayLike) -> RealOrArray:
    """Computes 2 J1(x) / x with the removable singularity at zero.

    Args:
        x (ArrayLike): real argument(s).

    Returns:
        RealOrArray: values in [-1, 1], equal to 1 at x = 0.
    """
    arr = np.asarray(x, dtype=float)
    _require_finite(arr, "j1_ratio")
    small = np.abs(arr) < J1_RATIO_SERIES_CUTOFF
    safe = np.where(small, 1.0, arr)
    x2 = arr * arr
    series = 1.0 - x2 / 8.0 + x2 * x2 / 192.0
    return _finish(np.where(small, series, 2.0 * special.j1(safe) / safe))


def bessel_i_ratio(rho: ArrayLike) -> RealOrArray:
    """Ratio I1(rho) / I0(rho) from exponentially scaled Bessel functions.

    Args:
        rho (ArrayLike): non-negative argument(s).

    Returns:
        RealOrArray: values in [0, 1).
    """
    arr = np.asarray(rho, dtype=float)
    _require_non_negative(arr, "bessel_i_ratio")
    return _finish(special.i1e(arr) / special.i0e(arr))


def marcum_q1(a: ArrayLike, b: ArrayLike) -> RealOrArray:
    """First-order Marcum-Q function Q1(a, b).

    Q1(a, b) is the tail of a Rice envelope, which is the survival function of
    a non-central chi-square variable with two degrees of freedom evaluated at
    b^2 with non-centrality a^2.

    Args:
        a (ArrayLike): non-negative non-centrality argument(s).
        b (ArrayLike): non-negative threshold argument(s).

    Returns:
        RealOrArray: probabilities in [0, 1].
    """
    a_arr, b_arr = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    _require_non_negative(a_arr, "marcum_q1")
    _require_non_negative(b_arr, "marcum_q1")
    centred = a_arr == 0.0
    rayleigh = np.exp(-0.5 * b_arr * b_arr)
    rice = stats.ncx2.sf(b_arr * b_arr, 2.0, np.where(centred, 1.0, a_arr) ** 2)
    return _finish(np.clip(np.where(centred, rayleigh, rice), 0.0, 1.0))


def oscillation_panels(phase_span: float) -> int:
    return 1 + int(phase_span / math.pi)


def hyp2f3_sidelobe(
    x: ArrayLike, quad: Optional[QuadratureSpec] = None
) -> RealOrArray:
    """Evaluates 2F3(1/2, 3/2; 1, 2, 3; -x^2).

    Uses f(x) = (1/pi) * integral over [0, pi] of |2 J1(x sin(t/2)) / (x sin(t/2))|^2 dt.

    Args:
        x (ArrayLike): non-negative argument(s).
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        RealOrArray: values in (0, 1].
    """
    arr = np.asarray(x, dtype=float)
    _require_non_negative(arr, "hyp2f3_sidelobe")

    def one(value: float) -> float:
        if value == 0.0:
            return 1.0

        def integrand(theta: float) -> float:
            return _j1_ratio_scalar(value * math.sin(0.5 * theta)) ** 2

        panels = oscillation_panels(value)
        return integrate_panels(integrand, 0.0, math.pi, quad, panels) / math.pi

    return map_scalar(one, arr)


def hyp1f2_radial(
    x: ArrayLike, quad: Optional[QuadratureSpec] = None
) -> RealOrArray:
    """Evaluates 1F2(1/2; 1, 3/2; -x^2).

    Uses (2/pi) * integral over [0, 1] of cos(2 x t) ln((1 + sqrt(1 - t^2)) / t) dt;
    the logarithmic endpoint singularity is left to the adaptive rule.

    Args:
        x (ArrayLike): non-negative argument(s), x = pi r_max / lambda.
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        RealOrArray: values in [-1, 1].
    """
    arr = np.asarray(x, dtype=float)
    _require_non_negative(arr, "hyp1f2_radial")

    def one(value: float) -> float:
        if value == 0.0:
            return 1.0

        def integrand(t: float) -> float:
            return math.cos(2.0 * value * t) * math.log(
                (1.0 + math.sqrt(max(0.0, 1.0 - t * t))) / t
            )

        panels = oscillation_panels(2.0 * value)
        return 2.0 / math.pi * integrate_panels(integrand, 0.0, 1.0, quad, panels)

    return map_scalar(one, arr)


def hyp1f2_angle(
    x: ArrayLike, quad: Optional[QuadratureSpec] = None
) -> RealOrArray:
    """Evaluates 1F2(1/2; 3/2, 2; -x^2) as the mean of 2 J1(2 x t) / (2 x t) over t in [0, 1].

    Args:
        x (ArrayLike): non-negative argument(s).
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        RealOrArray: values in [-1, 1], maximal (= 1) at x = 0.
    """
    arr = np.asarray(x, dtype=float)
    _require_non_negative(arr, "hyp1f2_angle")

    def one(value: float) -> float:
        if value == 0.0:
            return 1.0
        panels = oscillation_panels(2.0 * value)
        return integrate_panels(
            lambda t: _j1_ratio_scalar(2.0 * value * t), 0.0, 1.0, quad, panels
        )

    return map_scalar(one, arr)
