"""Directivity of random arrays: per realization, ensemble average and lower bounds."""

import logging
import math
import numpy as np

from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Optional, Tuple
from numpy.typing import NDArray
from scipy import optimize, special

from .array_model import ArrayConfig, NodeRealization, sample_realization
from .average_pattern import average_pattern
from .errors import DomainError, NumericError
from .montecarlo import mean_and_stderr, run_trials
from .specfun import QuadratureSpec, hyp2f3_sidelobe, integrate_panels, oscillation_panels

logger = logging.getLogger(__name__)

LEMMA1_C0 = 1.1727
THEOREM1_MU = LEMMA1_C0 / (4.0 * math.pi)
# beyond this many nodes the O(N^2) Bessel sum gives way to angular quadrature
PAIRWISE_MAX_NODES = 2048
_BLOCK_ELEMENTS = 1 << 22


class Lemma1Constants(NamedTuple):
    x0: float
    alpha0: float
    c0: float


@dataclass
class DirectivityReport:
    """Monte Carlo directivity next to its analytic bounds.

    Attributes:
        d_realizations (NDArray[np.float64]): directivity of each realization.
        d_av_mc (float): sample mean of the realizations.
        d_av_stderr (float): standard error of that mean.
        d_tilde_av (float): analytic lower bound from the average pattern.
        theorem1_bound (float): finite-N density bound on the normalized directivity.
        n_nodes (int): number of nodes.
        r_tilde (float): normalized disk radius.
    """

    d_realizations: NDArray[np.float64]
    d_av_mc: float
    d_av_stderr: float
    d_tilde_av: float
    theorem1_bound: float
    n_nodes: int
    r_tilde: float
    seed: int = field(default=0)

    @property
    def jensen_consistent(self) -> bool:
        return self.d_tilde_av <= self.d_av_mc + 3.0 * self.d_av_stderr

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_nodes": self.n_nodes,
            "r_tilde": self.r_tilde,
            "seed": self.seed,
            "n_trials": int(self.d_realizations.size),
            "d_av_mc": self.d_av_mc,
            "d_av_stderr": self.d_av_stderr,
            "d_tilde_av": self.d_tilde_av,
            "theorem1_bound": self.theorem1_bound,
            "jensen_consistent": self.jensen_consistent,
        }


def _target_frame_z(real: NodeRealization) -> NDArray[np.float64]:
    return real.radii * np.sin(real.angles)


def _pairwise_bracket(z: NDArray[np.float64], r_tilde: float) -> float:
    n = z.size
    scale = 4.0 * math.pi * r_tilde
    total = 0.0
    rows = max(1, _BLOCK_ELEMENTS // n)
    for start in range(0, n, rows):
        block = z[start : start + rows]
        total += float(special.j0(scale * (block[:, None] - z[None, :])).sum())
    # the diagonal contributes exactly N ones
    return 1.0 / n + (total - n) / n**2


def _angular_bracket(z: NDArray[np.float64], r_tilde: float) -> float:
    scale = 4.0 * math.pi * r_tilde
    # highest Fourier mode of the integrand is 2 * scale plus its Airy transition width
    m = int(2.0 * scale + 10.0 * (2.0 * scale) ** (1.0 / 3.0)) + 64
    t = 2.0 * math.pi * np.arange(m) / m
    total = 0.0
    rows = max(1, _BLOCK_ELEMENTS // z.size)
    for start in range(0, m, rows):
        block = np.sin(t[start : start + rows])
        factor = np.exp(1j * scale * block[:, None] * z[None, :]).mean(axis=1)
        total += float(np.sum(np.abs(factor) ** 2))
    return total / m


def directivity_realization(real: NodeRealization, r_tilde: float) -> float:
    """Directivity of one realization with the compound values taken in the target frame.

    The bracket 1/N + (1/N^2) sum_{k != l} J0(4 pi R (z_k - z_l)) equals the angular
    mean of the fixed-z pattern; large arrays evaluate that mean with the
    periodic trapezoid rule, which is exact for the band-limited integrand.

    Args:
        real (NodeRealization): node positions.
        r_tilde (float): normalized disk radius.

    Returns:
        float: directivity, strictly positive and at most N.
    """
    z = _target_frame_z(real)
    if z.size == 1:
        return 1.0
    if z.size <= PAIRWISE_MAX_NODES:
        bracket = _pairwise_bracket(z, r_tilde)
    else:
        bracket = _angular_bracket(z, r_tilde)
    return 1.0 / bracket


def mc_average_directivity(
    cfg: ArrayConfig, n_trials: int, workers: Optional[int] = None
) -> Tuple[float, float, NDArray[np.float64]]:
    """Monte Carlo mean of the per-realization directivity.

    Args:
        cfg (ArrayConfig): experiment identity.
        n_trials (int): number of realizations, at least 2.
        workers (Optional[int]): worker threads.

    Returns:
        Tuple[float, float, NDArray[np.float64]]: mean, standard error and the individual values.
    """
    if n_trials < 2:
        raise DomainError("At least two realizations are needed for a standard error")

    def trial(index: int) -> float:
        return directivity_realization(sample_realization(cfg, index), cfg.r_tilde)

    values = run_trials(n_trials, trial, workers)
    mean, stderr = mean_and_stderr(values)
    return float(mean), float(stderr), values


def directivity_lower(
    n_nodes: int, r_tilde: float, quad: Optional[QuadratureSpec] = None
) -> float:
    """Lower bound 2 pi / integral of the average pattern over [-pi, pi].

    Args:
        n_nodes (int): number of nodes.
        r_tilde (float): normalized disk radius.
        quad (Optional[QuadratureSpec]): tolerances.

    Returns:
        float: bound in [1, N].
    """
    if n_nodes < 1:
        raise DomainError("n_nodes must be at least 1")
    if n_nodes == 1:
        return 1.0
    panels = oscillation_panels(4.0 * math.pi * r_tilde)
    # the pattern is even in phi
    mean_power = integrate_panels(
        lambda phi: float(average_pattern(n_nodes, r_tilde, phi)),
        0.0,
        math.pi,
        quad,
        panels,
    ) / math.pi
    return 1.0 / mean_power


def directivity_lower_closed_form(
    n_nodes: int, r_tilde: float, quad: Optional[QuadratureSpec] = None
) -> float:
    """Lower bound N / (1 + (N - 1) f(4 pi R)) through the hypergeometric value f."""
    if n_nodes < 1:
        raise DomainError("n_nodes must be at least 1")
    f = float(hyp2f3_sidelobe(4.0 * math.pi * r_tilde, quad))
    return n_nodes / (1.0 + (n_nodes - 1) * f)


def theorem1_bound(n_nodes: int, r_tilde: float, limit: bool = False) -> float:
    """Lower bound on the normalized directivity that depends on the node density only.

    Args:
        n_nodes (int): number of nodes.
        r_tilde (float): normalized disk radius.
        limit (bool): return the large-N form 1 / (1 + mu N / R) instead of the finite-N one.

    Returns:
        float: bound on D / N.
    """
    if n_nodes < 1 or r_tilde <= 0:
        raise DomainError("theorem1_bound needs n_nodes >= 1 and r_tilde > 0")
    density = n_nodes / r_tilde
    if limit:
        return 1.0 / (1.0 + THEOREM1_MU * density)
    return 1.0 / (1.0 + (1.0 - 1.0 / n_nodes) * THEOREM1_MU * density)


def lemma1_constants() -> Lemma1Constants:
    """Re-derives the constants of the 1/x bound on the sidelobe integral.

    x0 is where J1(t) meets its envelope sqrt(2 / (pi t)); alpha0 makes the
    cosine continuation meet the envelope at x0; c0 follows from both.
    """

    def gap(t: float) -> float:
        return float(special.j1(t)) - math.sqrt(2.0 / (math.pi * t))

    try:
        x0 = float(optimize.bisect(gap, 2.0, 3.0, xtol=1e-13))
    except ValueError as e:
        raise NumericError(f"Envelope crossing bracket failed: {e}") from e
    level = math.sqrt(8.0 / (math.pi * x0**3))
    if level > 1.0:
        raise NumericError("Continuity condition has no solution", residual=level - 1.0)
    alpha0 = math.acos(level) / x0
    c0 = (
        x0 + math.sin(2.0 * alpha0 * x0) / (2.0 * alpha0) + 8.0 / (math.pi * x0**2)
    ) / math.pi
    logger.debug("lemma constants x0=%.6f alpha0=%.6f c0=%.6f", x0, alpha0, c0)
    return Lemma1Constants(x0=x0, alpha0=alpha0, c0=c0)


def directivity_report(
    cfg: ArrayConfig,
    n_trials: int,
    quad: Optional[QuadratureSpec] = None,
    workers: Optional[int] = None,
) -> DirectivityReport:
    mean, stderr, values = mc_average_directivity(cfg, n_trials, workers)
    return DirectivityReport(
        d_realizations=values,
        d_av_mc=mean,
        d_av_stderr=stderr,
        d_tilde_av=directivity_lower(cfg.n_nodes, cfg.r_tilde, quad),
        theorem1_bound=theorem1_bound(cfg.n_nodes, cfg.r_tilde),
        n_nodes=cfg.n_nodes,
        r_tilde=cfg.r_tilde,
        seed=cfg.seed,
    )
