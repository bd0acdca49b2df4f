"""Best-practice melting pattern identification for induction furnaces.

Telemetry is segmented into melts, melt temperature profiles are clustered
with time-series K-means, clusters are ranked with several MCDM methods, and
the savings of running every melt like the best cluster are estimated.
"""

__version__ = "0.1.0"

from meltline.cluster import ClusterModel, Metric, ProfileVector, distance, fit_kmeans, quality_metrics, resample_profile, sweep_k
from meltline.counterfactual import BestPracticeProfile, CounterfactualReport, percent_changes, project_best_practice
from meltline.ingest import TelemetryFrame, TelemetrySchema, clean_telemetry, completeness_report, load_telemetry
from meltline.mcdm import normalize_vector, rank_all, score_mew, score_mtopsis, score_saw, score_topsis, score_vikor
from meltline.metrics import DecisionMatrix, EmissionSeries, PriceSeries, build_decision_matrix, melt_cost_and_emissions
from meltline.segment import MeltSegment, SegmentationParams, detect_melt_endpoints, extract_melts

__all__ = [
    "BestPracticeProfile",
    "ClusterModel",
    "CounterfactualReport",
    "DecisionMatrix",
    "EmissionSeries",
    "MeltSegment",
    "Metric",
    "PriceSeries",
    "ProfileVector",
    "SegmentationParams",
    "TelemetryFrame",
    "TelemetrySchema",
    "build_decision_matrix",
    "clean_telemetry",
    "completeness_report",
    "detect_melt_endpoints",
    "distance",
    "extract_melts",
    "fit_kmeans",
    "load_telemetry",
    "melt_cost_and_emissions",
    "normalize_vector",
    "percent_changes",
    "project_best_practice",
    "quality_metrics",
    "rank_all",
    "resample_profile",
    "score_mew",
    "score_mtopsis",
    "score_saw",
    "score_topsis",
    "score_vikor",
    "sweep_k",
]
