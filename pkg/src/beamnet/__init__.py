from .array_model import ArrayConfig, NodeRealization, PatternCurve, beampattern, sample_realization
from .average_pattern import SidelobeRegion, average_pattern, beamwidth_3db, sidelobe_region
from .ccdf import CcdfCurve, GaussianMoments, ccdf_marcum, exact_ccdf, gaussian_moments, mc_ccdf
from .directivity import DirectivityReport, directivity_lower, directivity_report, theorem1_bound
from .errors import BeamnetError, DomainError, NumericError
from .impairments import (
    ClosedLoopParams,
    OpenLoopParams,
    avg_pattern_closed_loop,
    avg_pattern_open_loop,
    mc_impaired_pattern,
)
from .peak_sidelobe import OutageQuery, mc_peak_outage, outage_upper_bound, threshold_for_outage

__all__ = [
    "ArrayConfig",
    "NodeRealization",
    "PatternCurve",
    "beampattern",
    "sample_realization",
    "SidelobeRegion",
    "average_pattern",
    "beamwidth_3db",
    "sidelobe_region",
    "CcdfCurve",
    "GaussianMoments",
    "ccdf_marcum",
    "exact_ccdf",
    "gaussian_moments",
    "mc_ccdf",
    "DirectivityReport",
    "directivity_lower",
    "directivity_report",
    "theorem1_bound",
    "BeamnetError",
    "DomainError",
    "NumericError",
    "ClosedLoopParams",
    "OpenLoopParams",
    "avg_pattern_closed_loop",
    "avg_pattern_open_loop",
    "mc_impaired_pattern",
    "OutageQuery",
    "mc_peak_outage",
    "outage_upper_bound",
    "threshold_for_outage",
]
