"""Random-array geometry and the beampattern of one node realization.

Nodes are uniform on a disk of radius R; every length is normalized, so the
geometry is described by the normalized radius R/lambda alone. The target
direction is phi_0 = 0 and the elevation is fixed in the array plane.
"""

import logging
import math
import numpy as np

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError
from .montecarlo import stream_rng

logger = logging.getLogger(__name__)

DB_FLOOR = -200.0
# complex entries evaluated per block when building pattern matrices
_BLOCK_ELEMENTS = 1 << 22
_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class ArrayConfig:
    """Identity of one random-array experiment.

    Attributes:
        n_nodes (int): number of nodes N.
        r_tilde (float): disk radius normalized by the wavelength.
        seed (int): 64-bit experiment seed.
    """

    n_nodes: int
    r_tilde: float
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise DomainError("n_nodes must be a positive integer")
        if not (math.isfinite(self.r_tilde) and self.r_tilde > 0):
            raise DomainError("r_tilde must be finite and strictly positive")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise DomainError("seed must be an integer in [0, 2**64)")

    @property
    def density(self) -> float:
        return self.n_nodes / self.r_tilde


@dataclass(frozen=True)
class NodeRealization:
    """Node positions of one realization as normalized radii and angles."""

    radii: NDArray[np.float64]
    angles: NDArray[np.float64]

    def __post_init__(self) -> None:
        radii = np.array(self.radii, dtype=float)
        angles = np.array(self.angles, dtype=float)
        if radii.ndim != 1 or radii.shape != angles.shape or radii.size == 0:
            raise DomainError("radii and angles must be non-empty 1-D arrays of equal length")
        if np.any(radii < 0) or np.any(radii > 1):
            raise DomainError("Normalized radii must lie in [0, 1]")
        if np.any(angles < -math.pi) or np.any(angles >= math.pi):
            raise DomainError("Node angles must lie in [-pi, pi)")
        radii.flags.writeable = False
        angles.flags.writeable = False
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "angles", angles)

    @property
    def n_nodes(self) -> int:
        return int(self.radii.size)


@dataclass
class PatternCurve:
    """Power values over an angle grid.

    Attributes:
        angles (NDArray[np.float64]): look angles in radians.
        power (NDArray[np.float64]): linear power, mainbeam of a coherent array = 1.
        label (str): method tag.
        std_errors (Optional[NDArray[np.float64]]): standard errors of Monte Carlo means.
    """

    angles: NDArray[np.float64]
    power: NDArray[np.float64]
    label: str
    std_errors: Optional[NDArray[np.float64]] = field(default=None)

    def to_db(self, floor_db: float = DB_FLOOR) -> NDArray[np.float64]:
        return power_to_db(self.power, floor_db)


def power_to_db(power: ArrayLike, floor_db: float = DB_FLOOR) -> NDArray[np.float64]:
    """Converts linear power to dB, clamping zeros at the floor."""
    arr = np.asarray(power, dtype=float)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(arr)
    return np.maximum(db, floor_db)


def _check_angles(phi: NDArray[np.float64]) -> None:
    if not np.all(np.isfinite(phi)) or np.any(np.abs(phi) > math.pi + _ANGLE_SLACK):
        raise DomainError("Look angles must lie in [-pi, pi]")


def sample_realization(cfg: ArrayConfig, stream_index: int) -> NodeRealization:
    """Draws the node positions of one trial.

    Radii follow the density 2r on [0, 1] through r = sqrt(u); angles are
    uniform on [-pi, pi).

    Args:
        cfg (ArrayConfig): experiment identity.
        stream_index (int): trial index.

    Returns:
        NodeRealization: positions, identical for identical (seed, stream_index).
    """
    rng = stream_rng(cfg.seed, stream_index)
    radii = np.sqrt(rng.random(cfg.n_nodes))
    angles = rng.uniform(-math.pi, math.pi, cfg.n_nodes)
    return NodeRealization(radii=radii, angles=angles)


def node_positions(real: NodeRealization) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    return real.radii * np.cos(real.angles), real.radii * np.sin(real.angles)


def alpha(phi: ArrayLike, r_tilde: float) -> Union[float, NDArray[np.float64]]:
    """Phase scale 4 pi R sin(phi / 2) of the compound variable."""
    arr = np.asarray(phi, dtype=float)
    _check_angles(arr)
    value = 4.0 * math.pi * r_tilde * np.sin(0.5 * arr)
    return float(value) if value.ndim == 0 else value


def compound_z(real: NodeRealization, phi: float) -> NDArray[np.float64]:
    """Compound variables z_k = r_k sin(psi_k - phi / 2) for one look angle."""
    _check_angles(np.asarray(phi, dtype=float))
    return real.radii * np.sin(real.angles - 0.5 * phi)


def array_factor(real: NodeRealization, phi: float, r_tilde: float) -> complex:
    """Far-field array factor (1/N) sum_k exp(-j alpha(phi) z_k).

    The exponent carries -j; the beampattern is its squared modulus, so the
    sign convention never shows in any power quantity.
    """
    scale = alpha(phi, r_tilde)
    z = compound_z(real, phi)
    return complex(np.mean(np.exp(-1j * scale * z)))


def array_factor_grid(
    real: NodeRealization, grid: ArrayLike, r_tilde: float
) -> NDArray[np.complex128]:
    """Array factor evaluated on a grid of look angles."""
    phi = np.asarray(grid, dtype=float).ravel()
    _check_angles(phi)
    out = np.empty(phi.size, dtype=complex)
    rows = max(1, _BLOCK_ELEMENTS // real.n_nodes)
    for start in range(0, phi.size, rows):
        block = phi[start : start + rows]
        scale = 4.0 * math.pi * r_tilde * np.sin(0.5 * block)
        z = real.radii[None, :] * np.sin(real.angles[None, :] - 0.5 * block[:, None])
        out[start : start + rows] = np.exp(-1j * scale[:, None] * z).mean(axis=1)
    return out


def beampattern(
    real: NodeRealization, grid: ArrayLike, r_tilde: float
) -> PatternCurve:
    """Beampattern |F(phi)|^2 of one realization.

    Args:
        real (NodeRealization): node positions.
        grid (ArrayLike): look angles in [-pi, pi].
        r_tilde (float): normalized disk radius.

    Returns:
        PatternCurve: power in [0, 1], equal to 1 at phi = 0.
    """
    phi = np.asarray(grid, dtype=float).ravel()
    factor = array_factor_grid(real, phi, r_tilde)
    power = np.minimum(np.abs(factor) ** 2, 1.0)
    return PatternCurve(angles=phi, power=power, label="realization")


def beampattern_real_sum(
    real: NodeRealization, grid: ArrayLike, r_tilde: float
) -> NDArray[np.float64]:
    """Real double-sum form 1/N + (1/N^2) sum_{k != l} cos(alpha (z_k - z_l))."""
    phi = np.asarray(grid, dtype=float).ravel()
    _check_angles(phi)
    n = real.n_nodes
    out = np.empty(phi.size)
    for i, angle in enumerate(phi):
        z = compound_z(real, float(angle))
        scale = 4.0 * math.pi * r_tilde * math.sin(0.5 * angle)
        pair = np.cos(scale * (z[:, None] - z[None, :]))
        out[i] = 1.0 / n + (pair.sum() - n) / n**2
    return out


def pattern_from_z(
    z: ArrayLike, grid: ArrayLike, r_tilde: float
) -> NDArray[np.float64]:
    """Pattern |(1/N) sum_k exp(-j alpha(phi) z_k)|^2 with the z_k held fixed over phi."""
    z_arr = np.asarray(z, dtype=float).ravel()
    phi = np.asarray(grid, dtype=float).ravel()
    _check_angles(phi)
    out = np.empty(phi.size)
    rows = max(1, _BLOCK_ELEMENTS // z_arr.size)
    for start in range(0, phi.size, rows):
        block = phi[start : start + rows]
        scale = 4.0 * math.pi * r_tilde * np.sin(0.5 * block)
        factor = np.exp(-1j * scale[:, None] * z_arr[None, :]).mean(axis=1)
        out[start : start + rows] = np.abs(factor) ** 2
    return out


def default_grid(r_tilde: float, min_points: int = 257) -> NDArray[np.float64]:
    """Uniform grid over [-pi, pi] with at least 16 pi R points, always containing 0."""
    n = max(min_points, math.ceil(16.0 * math.pi * r_tilde))
    if n % 2 == 0:
        n += 1
    grid = np.linspace(-math.pi, math.pi, n)
    grid[n // 2] = 0.0
    return grid
