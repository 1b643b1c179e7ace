"""Command-line front end: experiment configuration, subcommands and CSV/JSON output."""

import argparse
import csv
import io
import json
import logging
import math
import sys
import numpy as np

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, TextIO, Tuple, Union
from numpy.typing import NDArray

from .array_model import ArrayConfig, beampattern, default_grid, power_to_db, sample_realization
from .average_pattern import (
    BEAMWIDTH_CONSTANT_ROUNDED,
    average_pattern,
    beamwidth_constant,
    sidelobe_region,
)
from .ccdf import (
    ccdf_marcum,
    ccdf_precise_gaussian,
    ccdf_rayleigh,
    exact_ccdf,
    gaussian_moments,
    mc_ccdf,
)
from .directivity import directivity_lower, directivity_lower_closed_form, directivity_report, lemma1_constants
from .errors import DomainError, NumericError
from .figures import FIGURES, FigureOptions, Table, build_figure
from .impairments import (
    ClosedLoopParams,
    ImpairmentParams,
    OpenLoopParams,
    Scenario,
    attenuation_phase,
    avg_pattern_closed_loop,
    avg_pattern_open_loop,
    mc_impaired_pattern,
)
from .montecarlo import mean_and_stderr, run_trials
from .peak_sidelobe import (
    MIN_NORMALIZED_P0,
    OutageQuery,
    mc_peak_outage,
    outage_upper_bound,
    simplified_bound,
    threshold_for_outage,
)
from .specfun import hyp1f2_angle, marcum_q1

logger = logging.getLogger(__name__)

FORMAT_TAG = "beamnet-sim v1"
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
COMMANDS = ("avg-pattern", "realization", "directivity", "ccdf", "peak-outage", "impairments", "figure", "selftest")
OutputFormat = Literal["csv", "json"]

# used when neither the config nor the flags name a trial count
DEFAULT_TRIALS: Dict[str, int] = {
    "avg-pattern": 0,
    "realization": 1,
    "directivity": 1000,
    "ccdf": 10_000,
    "peak-outage": 1000,
    "impairments": 1000,
    "figure": 0,
    "selftest": 0,
}
SELFTEST_TOLERANCE = 1e-3


@dataclass(frozen=True)
class AngleGridSpec:
    """Look-angle grid; without a count the grid resolves the sidelobe oscillation of the array."""

    count: Optional[int] = None
    start_deg: float = -180.0
    stop_deg: float = 180.0

    def build(self, r_tilde: float) -> NDArray[np.float64]:
        if not (-180.0 <= self.start_deg <= self.stop_deg <= 180.0):
            raise DomainError("Angle grid must satisfy -180 <= start_deg <= stop_deg <= 180")
        if self.count is None:
            if self.start_deg == -180.0 and self.stop_deg == 180.0:
                return default_grid(r_tilde)
            span = math.radians(self.stop_deg - self.start_deg)
            count = max(2, math.ceil(8.0 * r_tilde * span) + 1)
        else:
            count = self.count
        if count < 1:
            raise DomainError("Angle grid count must be at least 1")
        return np.linspace(math.radians(self.start_deg), math.radians(self.stop_deg), count)


@dataclass(frozen=True)
class ThresholdSpec:
    """Power thresholds in dB relative to the sidelobe floor 1/N."""

    start_db: float = -10.0
    stop_db: float = 12.0
    count: int = 45

    def build(self, n_nodes: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        if self.count < 1:
            raise DomainError("Threshold count must be at least 1")
        normalized_db = np.linspace(self.start_db, self.stop_db, self.count)
        return normalized_db, 10.0 ** (normalized_db / 10.0) / n_nodes


@dataclass(frozen=True)
class ImpairmentSpec:
    scenario: Scenario = "closed"
    loop_snr: float = 4.0
    rmax_over_lambda: float = 0.1
    psi_max: float = 0.05

    def params(self) -> ImpairmentParams:
        if self.scenario == "closed":
            return ClosedLoopParams(self.loop_snr)
        if self.scenario == "open":
            return OpenLoopParams(self.rmax_over_lambda, self.psi_max)
        raise DomainError(f"Unknown impairment scenario {self.scenario!r}")


@dataclass
class ExperimentSpec:
    """One experiment, complete enough to be replayed from its JSON form.

    Attributes:
        command (str): subcommand name.
        array (ArrayConfig): nodes, normalized radius and seed.
        angle_grid (AngleGridSpec): look angles of pattern outputs.
        thresholds (ThresholdSpec): thresholds of CCDF outputs.
        impairment (Optional[ImpairmentSpec]): impairment model of the impairments command.
        trials (Optional[int]): Monte Carlo trials; None picks the command default.
        phi_deg (float): look angle of the ccdf command.
        figure (Optional[int]): figure number of the figure command.
        realization_index (int): stream index drawn by the realization command.
        oversample (float): sampling-density factor of the peak search.
        refine (bool): parabolic refinement of sampled peaks.
        grid_size (int): FFT grid of the exact CCDF.
        output_path (Optional[str]): output file; stdout when None.
        format (OutputFormat): csv or json.
        workers (Optional[int]): worker threads.
    """

    command: str
    array: ArrayConfig = field(default_factory=lambda: ArrayConfig(16, 2.0, 0))
    angle_grid: AngleGridSpec = field(default_factory=AngleGridSpec)
    thresholds: ThresholdSpec = field(default_factory=ThresholdSpec)
    impairment: Optional[ImpairmentSpec] = None
    trials: Optional[int] = None
    phi_deg: float = 45.0
    figure: Optional[int] = None
    realization_index: int = 0
    oversample: float = 1.0
    refine: bool = False
    grid_size: int = 1024
    output_path: Optional[str] = None
    format: OutputFormat = "csv"
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise DomainError(f"Unknown command {self.command!r}; choose one of {', '.join(COMMANDS)}")
        if self.format not in ("csv", "json"):
            raise DomainError(f"Unknown output format {self.format!r}")
        if self.trials is not None and self.trials < 0:
            raise DomainError("trials must be non-negative")

    @property
    def resolved_trials(self) -> int:
        return DEFAULT_TRIALS[self.command] if self.trials is None else self.trials

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (ArrayConfig, AngleGridSpec, ThresholdSpec, ImpairmentSpec)):
                value = {g.name: getattr(value, g.name) for g in fields(value)}
            data[f.name] = value
        return data

    def provenance(self) -> Dict[str, Any]:
        """Config echoed next to results; it leaves out what cannot change the numbers."""
        data = self.to_dict()
        # figures resolve their own defaults and echo them in the table params
        if self.command != "figure":
            data["trials"] = self.resolved_trials
        for key in ("output_path", "format", "workers"):
            data.pop(key)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise DomainError(f"Unknown config keys: {', '.join(unknown)}")
        kwargs = dict(data)
        nested: Dict[str, Callable[..., Any]] = {
            "array": ArrayConfig,
            "angle_grid": AngleGridSpec,
            "thresholds": ThresholdSpec,
            "impairment": ImpairmentSpec,
        }
        try:
            for key, factory in nested.items():
                if isinstance(kwargs.get(key), dict):
                    kwargs[key] = factory(**kwargs[key])
            return cls(**kwargs)
        except TypeError as e:
            raise DomainError(f"Invalid config: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise DomainError(f"Config is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise DomainError("Config must be a JSON object")
        return cls.from_dict(data)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=_json_default)


def _format_cell(value: Any) -> str:
    if isinstance(value, (str, np.str_)):
        return str(value)
    return "%.12g" % float(value)


def write_csv(table: Table, config: Dict[str, Any], stream: TextIO) -> None:
    """Writes the format tag, the config line, the header row and one row per point."""
    stream.write(f"# {FORMAT_TAG}\n")
    stream.write(f"# config {_canonical_json({'config': config, 'params': table.params, 'table': table.name})}\n")
    writer = csv.writer(stream, lineterminator="\n")
    names = list(table.columns)
    writer.writerow(names)
    for i in range(table.n_rows):
        writer.writerow([_format_cell(table.columns[name][i]) for name in names])


def _parse_column(cells: List[str]) -> NDArray[Any]:
    try:
        return np.array([float(cell) for cell in cells], dtype=float)
    except ValueError:
        return np.array(cells, dtype=str)


def read_csv(source: Union[str, Path, TextIO]) -> Tuple[Dict[str, Any], Table]:
    """Reads a CSV written by write_csv back into its config and table.

    Args:
        source (Union[str, Path, TextIO]): file path or open stream.

    Returns:
        Tuple[Dict[str, Any], Table]: experiment config and the table with its params.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = text.splitlines()
    if len(lines) < 3 or lines[0] != f"# {FORMAT_TAG}" or not lines[1].startswith("# config "):
        raise DomainError(f"Not a {FORMAT_TAG} CSV file")
    meta = json.loads(lines[1][len("# config ") :])
    rows = list(csv.reader(io.StringIO("\n".join(lines[2:]))))
    header, body = rows[0], rows[1:]
    columns = {name: _parse_column([row[i] for row in body]) for i, name in enumerate(header)}
    return meta["config"], Table(name=meta["table"], columns=columns, params=meta["params"])


def _json_cell(value: Any) -> Any:
    if isinstance(value, (str, np.str_)):
        return str(value)
    number = float(value)
    return number if math.isfinite(number) else None


def write_json(table: Table, config: Dict[str, Any], stream: TextIO) -> None:
    """Writes the table as one JSON document; non-finite values become null."""
    document = {
        "format": FORMAT_TAG,
        "config": config,
        "table": table.name,
        "params": table.params,
        "columns": {name: [_json_cell(v) for v in values] for name, values in table.columns.items()},
    }
    stream.write(json.dumps(document, sort_keys=True, indent=2, default=_json_default))
    stream.write("\n")


def run_avg_pattern(spec: ExperimentSpec) -> Table:
    cfg = spec.array
    grid = spec.angle_grid.build(cfg.r_tilde)
    power = np.asarray(average_pattern(cfg.n_nodes, cfg.r_tilde, grid), dtype=float)
    columns: Dict[str, NDArray[Any]] = {
        "angle_deg": np.degrees(grid),
        "power": power,
        "power_db": power_to_db(power),
    }
    trials = spec.resolved_trials
    if trials >= 2:

        def trial(index: int) -> NDArray[np.float64]:
            return beampattern(sample_realization(cfg, index), grid, cfg.r_tilde).power

        mean, stderr = mean_and_stderr(run_trials(trials, trial, spec.workers))
        columns["mc_power"] = mean
        columns["mc_stderr"] = stderr
        columns["mc_power_db"] = power_to_db(mean)
    return Table("avg-pattern", columns)


def run_realization(spec: ExperimentSpec) -> Table:
    cfg = spec.array
    grid = spec.angle_grid.build(cfg.r_tilde)
    curve = beampattern(sample_realization(cfg, spec.realization_index), grid, cfg.r_tilde)
    columns = {
        "angle_deg": np.degrees(grid),
        "power": curve.power,
        "power_db": curve.to_db(),
        "average_db": power_to_db(average_pattern(cfg.n_nodes, cfg.r_tilde, grid)),
    }
    return Table("realization", columns, {"realization_index": spec.realization_index})


def run_directivity(spec: ExperimentSpec) -> Table:
    cfg = spec.array
    report = directivity_report(cfg, spec.resolved_trials, workers=spec.workers)
    summary = report.to_dict()
    summary["d_tilde_av_closed_form"] = directivity_lower_closed_form(cfg.n_nodes, cfg.r_tilde)
    columns = {key: np.array([float(value)]) for key, value in summary.items()}
    if not report.jensen_consistent:
        logger.warning(
            "average-pattern bound %.6g exceeds the Monte Carlo mean %.6g by more than 3 standard errors",
            report.d_tilde_av,
            report.d_av_mc,
        )
    return Table("directivity", columns)


def run_ccdf(spec: ExperimentSpec) -> Table:
    cfg = spec.array
    phi = math.radians(spec.phi_deg)
    if abs(phi) > math.pi:
        raise DomainError("phi_deg must lie in [-180, 180]")
    normalized_db, p0 = spec.thresholds.build(cfg.n_nodes)
    alpha = 4.0 * math.pi * cfg.r_tilde * abs(math.sin(0.5 * phi))
    mom = gaussian_moments(cfg.n_nodes, alpha)
    if mom.var_x > 0.0 and mom.var_y > 0.0:
        precise = ccdf_precise_gaussian(mom, p0).probs
    else:
        precise = np.full(p0.size, np.nan)
    columns: Dict[str, NDArray[Any]] = {
        "p0_norm_db": normalized_db,
        "p0": p0,
        "exact": exact_ccdf(cfg.n_nodes, alpha, p0, spec.grid_size).probs,
        "precise_gaussian": precise,
        "marcum": ccdf_marcum(mom, p0).probs,
        "rayleigh": ccdf_rayleigh(cfg.n_nodes, p0).probs,
    }
    if spec.resolved_trials > 0:
        mc = mc_ccdf(cfg, phi, p0, spec.resolved_trials, spec.workers)
        assert mc.std_errors is not None
        columns["monte_carlo"] = mc.probs
        columns["mc_stderr"] = mc.std_errors
    return Table("ccdf", columns, {"phi": phi, "alpha": alpha})


def run_peak_outage(spec: ExperimentSpec) -> Table:
    cfg = spec.array
    region = sidelobe_region(cfg.n_nodes, cfg.r_tilde)
    normalized_db, p0 = spec.thresholds.build(cfg.n_nodes)
    bound = np.full(p0.size, np.nan)
    for i, value in enumerate(p0):
        if cfg.n_nodes * value > MIN_NORMALIZED_P0:
            bound[i] = outage_upper_bound(OutageQuery(cfg.n_nodes, cfg.r_tilde, float(value)), region)
    columns: Dict[str, NDArray[Any]] = {"p0_norm_db": normalized_db, "p0": p0, "bound": bound}
    if spec.resolved_trials > 0:
        mc = mc_peak_outage(cfg, p0, spec.resolved_trials, spec.oversample, spec.refine, spec.workers)
        assert mc.std_errors is not None
        columns["monte_carlo"] = mc.probs
        columns["mc_stderr"] = mc.std_errors
    return Table("peak-outage", columns, {"phi_zero": region.phi_zero, "n0": region.n0})


def run_impairments(spec: ExperimentSpec) -> Table:
    cfg = spec.array
    impairment = spec.impairment or ImpairmentSpec()
    params = impairment.params()
    grid = spec.angle_grid.build(cfg.r_tilde)
    if isinstance(params, ClosedLoopParams):
        analytic = avg_pattern_closed_loop(cfg.n_nodes, cfg.r_tilde, grid, params)
    else:
        analytic = avg_pattern_open_loop(cfg.n_nodes, cfg.r_tilde, grid, params)
    power = np.asarray(analytic, dtype=float)
    columns: Dict[str, NDArray[Any]] = {
        "angle_deg": np.degrees(grid),
        "power": power,
        "power_db": power_to_db(power),
        "unimpaired_db": power_to_db(average_pattern(cfg.n_nodes, cfg.r_tilde, grid)),
    }
    if spec.resolved_trials > 0:
        curve = mc_impaired_pattern(cfg, grid, impairment.scenario, params, spec.resolved_trials, spec.workers)
        assert curve.std_errors is not None
        columns["mc_power"] = curve.power
        columns["mc_stderr"] = curve.std_errors
        columns["mc_power_db"] = curve.to_db()
    return Table("impairments", columns, {"scenario": impairment.scenario})


def run_figure(spec: ExperimentSpec) -> Table:
    if spec.figure is None:
        raise DomainError("The figure command needs a figure number")
    opts = FigureOptions(
        seed=spec.array.seed,
        trials=spec.trials,
        workers=spec.workers,
        grid_size=spec.grid_size,
    )
    return build_figure(spec.figure, opts)


def selftest_checks() -> List[Tuple[str, float, float, float]]:
    """Re-derived constants and oracle cross-checks as (name, value, expected, tolerance)."""
    constants = lemma1_constants()
    r_tilde = 2.0
    mom = gaussian_moments(16, 3.0)
    p_av = float(average_pattern(16, r_tilde, 2.0 * math.asin(3.0 / (4.0 * math.pi * r_tilde))))
    p_norm = threshold_for_outage(0.01, 8.0)
    return [
        ("beamwidth_constant", beamwidth_constant(), BEAMWIDTH_CONSTANT_ROUNDED, SELFTEST_TOLERANCE),
        ("lemma_x0", constants.x0, 2.4445, SELFTEST_TOLERANCE),
        ("lemma_alpha0", constants.alpha0, 0.4664, SELFTEST_TOLERANCE),
        ("lemma_c0", constants.c0, 1.1727, SELFTEST_TOLERANCE),
        (
            "directivity_bound_routes",
            directivity_lower(16, r_tilde) / directivity_lower_closed_form(16, r_tilde),
            1.0,
            1e-6,
        ),
        ("gaussian_mean_power", mom.mean_power, 16 * p_av, 1e-9),
        ("marcum_zero_mean", float(marcum_q1(0.0, 1.5)), math.exp(-1.125), 1e-9),
        ("threshold_round_trip", simplified_bound(p_norm, 8.0), 0.01, 1e-10),
        (
            "closed_loop_half_power_db",
            10.0 * math.log10(attenuation_phase(ClosedLoopParams(10.0**0.3)) ** 2),
            -3.0,
            0.5,
        ),
        ("angular_half_power_db", 10.0 * math.log10(float(hyp1f2_angle(0.5 * math.pi)) ** 2), -3.0, 0.5),
    ]


def run_selftest(spec: ExperimentSpec) -> Table:
    checks = selftest_checks()
    errors = np.array([abs(value - expected) for _, value, expected, _ in checks])
    tolerances = np.array([tol for *_, tol in checks])
    columns: Dict[str, NDArray[Any]] = {
        "check": np.array([name for name, *_ in checks], dtype=str),
        "value": np.array([value for _, value, _, _ in checks]),
        "expected": np.array([expected for _, _, expected, _ in checks]),
        "abs_error": errors,
        "tolerance": tolerances,
        "passed": (errors <= tolerances).astype(float),
    }
    return Table("selftest", columns)


HANDLERS: Dict[str, Callable[[ExperimentSpec], Table]] = {
    "avg-pattern": run_avg_pattern,
    "realization": run_realization,
    "directivity": run_directivity,
    "ccdf": run_ccdf,
    "peak-outage": run_peak_outage,
    "impairments": run_impairments,
    "figure": run_figure,
    "selftest": run_selftest,
}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> Any:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise DomainError(f"{self.prog}: {message}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON experiment config; explicit flags override it")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format (default csv)")
    parser.add_argument("--output", help="Output file (default stdout)")
    parser.add_argument("--workers", type=int, help="Worker threads (default BEAMNET_THREADS or 1)")
    parser.add_argument("--seed", type=int, help="Experiment seed")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")


def _add_array(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", dest="n_nodes", type=int, help="Number of nodes")
    parser.add_argument("--rtilde", dest="r_tilde", type=float, help="Disk radius over wavelength")


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid-count", type=int, help="Number of look angles")
    parser.add_argument("--grid-start-deg", type=float, help="First look angle in degrees")
    parser.add_argument("--grid-stop-deg", type=float, help="Last look angle in degrees")


def _add_thresholds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--threshold-start-db", type=float, help="Lowest threshold, dB above 1/N")
    parser.add_argument("--threshold-stop-db", type=float, help="Highest threshold, dB above 1/N")
    parser.add_argument("--threshold-count", type=int, help="Number of thresholds")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="beamnet", description="Beampattern statistics of random arrays on a disk")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    avg = sub.add_parser("avg-pattern", help="Average pattern, optionally with its Monte Carlo mean")
    _add_array(avg)
    _add_grid(avg)

    real = sub.add_parser("realization", help="Pattern of one node realization")
    _add_array(real)
    _add_grid(real)
    real.add_argument("--index", dest="realization_index", type=int, help="Stream index of the realization")

    direc = sub.add_parser("directivity", help="Monte Carlo directivity against its lower bounds")
    _add_array(direc)

    ccdf = sub.add_parser("ccdf", help="CCDF of the pattern at one look angle")
    _add_array(ccdf)
    _add_thresholds(ccdf)
    ccdf.add_argument("--phi-deg", type=float, help="Look angle in degrees")
    ccdf.add_argument("--grid-size", type=int, help="FFT grid of the exact CCDF")

    peak = sub.add_parser("peak-outage", help="Peak-sidelobe outage against the crossing bound")
    _add_array(peak)
    _add_thresholds(peak)
    peak.add_argument("--oversample", type=float, help="Sampling-density factor of the peak search")
    peak.add_argument("--refine", action="store_true", default=None, help="Parabolic peak refinement")

    imp = sub.add_parser("impairments", help="Average pattern under phase or location errors")
    _add_array(imp)
    _add_grid(imp)
    imp.add_argument("--scenario", choices=["closed", "open"], help="Closed-loop jitter or open-loop location errors")
    imp.add_argument("--loop-snr", type=float, help="Loop SNR (linear)")
    imp.add_argument("--rmax", dest="rmax_over_lambda", type=float, help="Radial error bound over wavelength")
    imp.add_argument("--psi-max", type=float, help="Angular error bound in radians")

    fig = sub.add_parser("figure", help="Data behind one figure")
    fig.add_argument("figure", type=int, choices=sorted(FIGURES), help="Figure number")
    fig.add_argument("--grid-size", type=int, help="FFT grid of the exact CCDF")

    sub.add_parser("selftest", help="Re-derive the constants and run oracle cross-checks")

    for subparser in sub.choices.values():
        _add_common(subparser)
    return parser


def _set_if_given(obj: Any, updates: Dict[str, Any]) -> Any:
    given = {key: value for key, value in updates.items() if value is not None}
    return replace(obj, **given) if given else obj


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """Expands the parsed flags into an ExperimentSpec, on top of --config when given."""
    flags = vars(args)
    if flags.get("config"):
        try:
            text = Path(flags["config"]).read_text(encoding="utf-8")
        except OSError as e:
            raise DomainError(f"Cannot read config {flags['config']}: {e}") from e
        spec = ExperimentSpec.from_json(text)
        if spec.command != args.command:
            spec = replace(spec, command=args.command)
    else:
        spec = ExperimentSpec(command=args.command)

    array = _set_if_given(
        spec.array,
        {"n_nodes": flags.get("n_nodes"), "r_tilde": flags.get("r_tilde"), "seed": flags.get("seed")},
    )
    grid = _set_if_given(
        spec.angle_grid,
        {
            "count": flags.get("grid_count"),
            "start_deg": flags.get("grid_start_deg"),
            "stop_deg": flags.get("grid_stop_deg"),
        },
    )
    thresholds = _set_if_given(
        spec.thresholds,
        {
            "start_db": flags.get("threshold_start_db"),
            "stop_db": flags.get("threshold_stop_db"),
            "count": flags.get("threshold_count"),
        },
    )
    impairment_flags = {
        "scenario": flags.get("scenario"),
        "loop_snr": flags.get("loop_snr"),
        "rmax_over_lambda": flags.get("rmax_over_lambda"),
        "psi_max": flags.get("psi_max"),
    }
    impairment = spec.impairment
    if any(value is not None for value in impairment_flags.values()) or (
        impairment is None and args.command == "impairments"
    ):
        impairment = _set_if_given(impairment or ImpairmentSpec(), impairment_flags)

    return _set_if_given(
        replace(spec, array=array, angle_grid=grid, thresholds=thresholds, impairment=impairment),
        {
            "trials": flags.get("trials"),
            "phi_deg": flags.get("phi_deg"),
            "figure": flags.get("figure"),
            "realization_index": flags.get("realization_index"),
            "oversample": flags.get("oversample"),
            "refine": flags.get("refine"),
            "grid_size": flags.get("grid_size"),
            "output_path": flags.get("output"),
            "format": flags.get("format"),
            "workers": flags.get("workers"),
        },
    )


def _emit(table: Table, spec: ExperimentSpec) -> None:
    writer = write_csv if spec.format == "csv" else write_json
    config = spec.provenance()
    if spec.output_path is None:
        writer(table, config, sys.stdout)
        return
    with open(spec.output_path, "w", encoding="utf-8", newline="") as handle:
        writer(table, config, handle)
    logger.info("wrote %d rows to %s", table.n_rows, spec.output_path)


def _error_record(error: BaseException, exit_code: int) -> int:
    record: Dict[str, Any] = {"error": type(error).__name__, "message": str(error), "exit_code": exit_code}
    residual = getattr(error, "residual", None)
    if residual is not None:
        record["residual"] = residual
    sys.stderr.write(_canonical_json(record) + "\n")
    return exit_code


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parses argv, runs one subcommand and writes its table.

    Args:
        argv (Optional[Sequence[str]]): arguments without the program name; sys.argv when None.

    Returns:
        int: 0 on success, 2 for usage and domain errors, 3 for numeric failures.
    """
    try:
        args = build_parser().parse_args(argv)
    except DomainError as e:
        return _error_record(e, EXIT_USAGE)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    _configure_logging(args.verbose)
    try:
        spec = spec_from_args(args)
        logger.debug("experiment %s", _canonical_json(spec.to_dict()))
        table = HANDLERS[spec.command](spec)
        _emit(table, spec)
    except NumericError as e:
        return _error_record(e, EXIT_NUMERIC)
    except DomainError as e:
        return _error_record(e, EXIT_USAGE)
    except OSError as e:
        return _error_record(e, EXIT_USAGE)
    if spec.command == "selftest" and not bool(np.all(table.columns["passed"] == 1.0)):
        failed = [str(name) for name, ok in zip(table.columns["check"], table.columns["passed"]) if ok != 1.0]
        return _error_record(NumericError(f"Self-test checks failed: {', '.join(failed)}"), EXIT_NUMERIC)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
