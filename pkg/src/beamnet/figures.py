"""Data generators behind ``beamnet figure N``.

Every generator returns a :class:`Table` in long format: one row per point,
with the swept parameters repeated as columns so every column has the same
length.
"""

import logging
import math
import numpy as np

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional
from numpy.typing import NDArray

from .array_model import ArrayConfig, beampattern, default_grid, power_to_db, sample_realization
from .average_pattern import average_pattern, beamwidth_3db, sidelobe_region
from .ccdf import ccdf_marcum, ccdf_precise_gaussian, ccdf_rayleigh, exact_ccdf, gaussian_moments, mc_ccdf
from .directivity import directivity_lower, mc_average_directivity, theorem1_bound
from .errors import DomainError, EmptyRegionError
from .impairments import ClosedLoopParams, OpenLoopParams, attenuation_phase, attenuation_radial, mc_impaired_pattern
from .montecarlo import mean_and_stderr, run_trials
from .peak_sidelobe import OutageQuery, mc_peak_outage, outage_upper_bound, threshold_for_outage
from .specfun import hyp1f2_angle

logger = logging.getLogger(__name__)


@dataclass
class Table:
    """Named columns of equal length plus the parameters that produced them.

    Attributes:
        name (str): table identifier.
        columns (Dict[str, NDArray[np.float64]]): ordered column name to values.
        params (Dict[str, Any]): resolved parameters, echoed with the output.
    """

    name: str
    columns: Dict[str, NDArray[np.float64]]
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lengths = {len(values) for values in self.columns.values()}
        if len(lengths) > 1:
            raise DomainError(f"Columns of table {self.name} have different lengths: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @classmethod
    def from_rows(
        cls, name: str, header: List[str], rows: List[List[float]], params: Optional[Dict[str, Any]] = None
    ) -> "Table":
        data = np.asarray(rows, dtype=float).reshape(-1, len(header))
        columns = {key: data[:, i] for i, key in enumerate(header)}
        return cls(name=name, columns=columns, params=params or {})


@dataclass(frozen=True)
class FigureOptions:
    """Run options shared by every figure.

    Attributes:
        seed (int): experiment seed.
        trials (Optional[int]): Monte Carlo trials; each figure has its own default.
        workers (Optional[int]): worker threads.
        grid_size (int): FFT grid size of the exact CCDF.
    """

    seed: int = 0
    trials: Optional[int] = None
    workers: Optional[int] = None
    grid_size: int = 1024

    def trials_or(self, default: int) -> int:
        return default if self.trials is None else self.trials


def _params(opts: FigureOptions, trials: Optional[int] = None, **extra: Any) -> Dict[str, Any]:
    params: Dict[str, Any] = {"seed": opts.seed}
    if trials is not None:
        params["trials"] = trials
    params.update(extra)
    return params


def figure_average_pattern(opts: FigureOptions) -> Table:
    """Average pattern against the Monte Carlo mean for N in {16, 256}, R in {1, 2, 8}."""
    trials = opts.trials_or(10_000)
    grid = np.linspace(0.0, math.pi, 64)
    rows: List[List[float]] = []
    for n_nodes in (16, 256):
        for r_tilde in (1.0, 2.0, 8.0):
            cfg = ArrayConfig(n_nodes, r_tilde, opts.seed)

            def trial(index: int) -> NDArray[np.float64]:
                return beampattern(sample_realization(cfg, index), grid, r_tilde).power

            mean, stderr = mean_and_stderr(run_trials(trials, trial, opts.workers))
            analytic = np.asarray(average_pattern(n_nodes, r_tilde, grid))
            for i, phi in enumerate(grid):
                rows.append(
                    [n_nodes, r_tilde, math.degrees(phi), analytic[i], mean[i], stderr[i]]
                )
    header = ["n_nodes", "r_tilde", "angle_deg", "power", "mc_power", "mc_stderr"]
    table = Table.from_rows("figure-2", header, rows, _params(opts, trials))
    table.columns["power_db"] = power_to_db(table.columns["power"])
    table.columns["mc_power_db"] = power_to_db(table.columns["mc_power"])
    return table


def figure_threshold_angles(opts: FigureOptions) -> Table:
    """3 dB beamwidth and sidelobe-region threshold angle against R."""
    r_values = np.logspace(0.0, 2.0, 41)
    node_counts = (16, 64, 256, 1024)
    columns: Dict[str, NDArray[np.float64]] = {
        "r_tilde": r_values,
        "beamwidth_deg": np.array([math.degrees(beamwidth_3db(r)) for r in r_values]),
    }
    for n_nodes in node_counts:
        values = []
        for r_tilde in r_values:
            try:
                values.append(math.degrees(sidelobe_region(n_nodes, float(r_tilde)).phi_zero))
            except EmptyRegionError:
                values.append(math.nan)
        columns[f"region_deg_n{n_nodes}"] = np.array(values)
    return Table("figure-3", columns, _params(opts))


def figure_directivity(opts: FigureOptions) -> Table:
    """Normalized directivity bound and Monte Carlo mean against R for N in {16, 256}."""
    trials = opts.trials_or(1000)
    rows: List[List[float]] = []
    for n_nodes in (16, 256):
        for r_tilde in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0):
            cfg = ArrayConfig(n_nodes, r_tilde, opts.seed)
            mean, stderr, _ = mc_average_directivity(cfg, trials, opts.workers)
            lower = directivity_lower(n_nodes, r_tilde)
            rows.append([n_nodes, r_tilde, lower / n_nodes, mean / n_nodes, stderr / n_nodes])
    header = ["n_nodes", "r_tilde", "d_lower_norm", "d_mc_norm", "d_mc_stderr_norm"]
    return Table.from_rows("figure-4", header, rows, _params(opts, trials))


def figure_density(opts: FigureOptions) -> Table:
    """Normalized directivity bound against node density, with the density bound."""
    densities = np.logspace(-1.0, 1.0, 21)
    rows: List[List[float]] = []
    for n_nodes in (16, 256):
        for density in densities:
            r_tilde = n_nodes / density
            rows.append(
                [
                    n_nodes,
                    density,
                    r_tilde,
                    directivity_lower(n_nodes, r_tilde) / n_nodes,
                    theorem1_bound(n_nodes, r_tilde),
                    theorem1_bound(n_nodes, r_tilde, limit=True),
                ]
            )
    header = ["n_nodes", "density", "r_tilde", "d_lower_norm", "theorem1_bound", "theorem1_limit"]
    return Table.from_rows("figure-5", header, rows, _params(opts))


def figure_realization(opts: FigureOptions) -> Table:
    """One realization (N = 16, R = 2) against the average pattern."""
    n_nodes, r_tilde = 16, 2.0
    grid = default_grid(r_tilde)
    cfg = ArrayConfig(n_nodes, r_tilde, opts.seed)
    curve = beampattern(sample_realization(cfg, 0), grid, r_tilde)
    columns = {
        "angle_deg": np.degrees(grid),
        "realization_db": curve.to_db(),
        "average_db": power_to_db(average_pattern(n_nodes, r_tilde, grid)),
    }
    return Table("figure-6", columns, _params(opts, n_nodes=n_nodes, r_tilde=r_tilde))


def _ccdf_rows(
    opts: FigureOptions,
    n_nodes: int,
    r_tilde: float,
    phi: float,
    normalized_db: NDArray[np.float64],
    trials: int,
    precise: bool,
) -> List[List[float]]:
    p0 = 10.0 ** (normalized_db / 10.0) / n_nodes
    alpha = 4.0 * math.pi * r_tilde * math.sin(0.5 * abs(phi))
    mom = gaussian_moments(n_nodes, alpha)
    exact = exact_ccdf(n_nodes, alpha, p0, opts.grid_size).probs
    marcum = ccdf_marcum(mom, p0).probs
    other = (ccdf_precise_gaussian(mom, p0) if precise else ccdf_rayleigh(n_nodes, p0)).probs
    mc = mc_ccdf(ArrayConfig(n_nodes, r_tilde, opts.seed), phi, p0, trials, opts.workers)
    assert mc.std_errors is not None
    return [
        [n_nodes, normalized_db[i], p0[i], exact[i], marcum[i], other[i], mc.probs[i], mc.std_errors[i]]
        for i in range(p0.size)
    ]


def figure_ccdf_sidelobe(opts: FigureOptions) -> Table:
    """CCDF at phi = pi/4, R = 2 for N in {16, 256, 1024}."""
    trials = opts.trials_or(100_000)
    normalized_db = np.linspace(-10.0, 12.0, 45)
    rows: List[List[float]] = []
    for n_nodes in (16, 256, 1024):
        rows += _ccdf_rows(opts, n_nodes, 2.0, math.pi / 4.0, normalized_db, trials, precise=False)
    header = ["n_nodes", "p0_norm_db", "p0", "exact", "marcum", "rayleigh", "monte_carlo", "mc_stderr"]
    return Table.from_rows("figure-7", header, rows, _params(opts, trials, r_tilde=2.0, phi=math.pi / 4.0))


def figure_ccdf_mainbeam(opts: FigureOptions) -> Table:
    """CCDF at the 3 dB beamwidth angle, R = 2, for N in {16, 64, 256, 1024}."""
    trials = opts.trials_or(100_000)
    r_tilde = 2.0
    phi = beamwidth_3db(r_tilde)
    rows: List[List[float]] = []
    for n_nodes in (16, 64, 256, 1024):
        # thresholds around the -3 dB mean power, in dB relative to 1/N
        normalized_db = 10.0 * math.log10(n_nodes) + np.linspace(-12.0, 3.0, 46)
        rows += _ccdf_rows(opts, n_nodes, r_tilde, phi, normalized_db, trials, precise=True)
    header = ["n_nodes", "p0_norm_db", "p0", "exact", "marcum", "precise_gaussian", "monte_carlo", "mc_stderr"]
    return Table.from_rows("figure-8", header, rows, _params(opts, trials, r_tilde=r_tilde, phi=phi))


def figure_peak_outage(opts: FigureOptions) -> Table:
    """Peak-sidelobe outage against the crossing bound at density 2."""
    trials = opts.trials_or(10_000)
    normalized_db = np.linspace(0.0, 12.0, 25)
    rows: List[List[float]] = []
    for n_nodes in (32, 128):
        r_tilde = n_nodes / 2.0
        region = sidelobe_region(n_nodes, r_tilde)
        p0 = 10.0 ** (normalized_db / 10.0) / n_nodes
        mc = mc_peak_outage(ArrayConfig(n_nodes, r_tilde, opts.seed), p0, trials, workers=opts.workers)
        assert mc.std_errors is not None
        for i, value in enumerate(p0):
            bound = outage_upper_bound(OutageQuery(n_nodes, r_tilde, float(value)), region)
            rows.append([n_nodes, r_tilde, normalized_db[i], bound, mc.probs[i], mc.std_errors[i]])
    header = ["n_nodes", "r_tilde", "p0_norm_db", "bound", "monte_carlo", "mc_stderr"]
    return Table.from_rows("figure-9", header, rows, _params(opts, trials))


def figure_threshold_inversion(opts: FigureOptions) -> Table:
    """Largest normalized threshold allowed by the bound against R."""
    rows: List[List[float]] = []
    for p_out in (0.001, 0.01, 0.1):
        for r_tilde in np.logspace(0.0, 2.0, 41):
            p_norm = threshold_for_outage(p_out, float(r_tilde))
            rows.append([p_out, r_tilde, p_norm, 10.0 * math.log10(p_norm)])
    header = ["p_out", "r_tilde", "p0_norm", "p0_norm_db"]
    return Table.from_rows("figure-10", header, rows, _params(opts))


def figure_closed_loop(opts: FigureOptions) -> Table:
    """Mainbeam attenuation against loop SNR with its Monte Carlo counterpart (N = 16, R = 2)."""
    trials = opts.trials_or(10_000)
    cfg = ArrayConfig(16, 2.0, opts.seed)
    snr_db = np.linspace(-10.0, 20.0, 31)
    analytic = np.array([attenuation_phase(ClosedLoopParams(10.0 ** (s / 10.0))) ** 2 for s in snr_db])
    inv_n = 1.0 / cfg.n_nodes
    mc_gain = []
    for s in snr_db:
        curve = mc_impaired_pattern(cfg, [0.0], "closed", ClosedLoopParams(10.0 ** (s / 10.0)), trials, opts.workers)
        # remove the 1/N floor to compare with |A|^2
        mc_gain.append((float(curve.power[0]) - inv_n) / (1.0 - inv_n))
    columns = {
        "loop_snr_db": snr_db,
        "attenuation_sq_db": power_to_db(analytic),
        "mc_attenuation_sq_db": power_to_db(np.clip(mc_gain, 0.0, None)),
    }
    return Table("figure-11", columns, _params(opts, trials, n_nodes=cfg.n_nodes, r_tilde=cfg.r_tilde))


def figure_open_loop(opts: FigureOptions) -> Table:
    """Mainbeam attenuation against radial and angular error bounds."""
    errors = np.linspace(0.0, 1.0, 41)
    radial = np.array([attenuation_radial(OpenLoopParams(float(e), 0.0)) ** 2 for e in errors])
    # A_psi(0) depends on R psi_max / lambda only
    angular = np.square(np.asarray(hyp1f2_angle(math.pi * errors)))
    columns = {
        "normalized_error": errors,
        "radial_db": power_to_db(radial),
        "angular_db": power_to_db(angular),
    }
    return Table("figure-12", columns, _params(opts))


FIGURES: Dict[int, Callable[[FigureOptions], Table]] = {
    2: figure_average_pattern,
    3: figure_threshold_angles,
    4: figure_directivity,
    5: figure_density,
    6: figure_realization,
    7: figure_ccdf_sidelobe,
    8: figure_ccdf_mainbeam,
    9: figure_peak_outage,
    10: figure_threshold_inversion,
    11: figure_closed_loop,
    12: figure_open_loop,
}


def build_figure(number: int, opts: FigureOptions) -> Table:
    if number not in FIGURES:
        raise DomainError(f"Unknown figure {number}; choose one of {sorted(FIGURES)}")
    logger.info("building figure %d", number)
    return FIGURES[number](opts)
