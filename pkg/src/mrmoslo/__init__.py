"""VM consolidation simulator with multiple-regression / seven-spot ladybird host overload detection."""

from .detection import DetectorConfig, DetectorKind, Verdict, classify, detect
from .domain import ClusterState, HostSpec, HostState, LoadState, UtilizationSample, VmSpec, validate_cluster
from .engine import EngineConfig, run_simulation, step
from .metrics import SimulationResult
from .moslo import MosloConfig, ThresholdPair, select_thresholds
from .regression import RegressionModel, ResourceWeights, fit_ols, load_score, predict_utilization, regression_target
from .workload import WorkloadTrace, generate_random_workload, load_trace, render_trace

__all__ = [
    "ClusterState", "DetectorConfig", "DetectorKind", "EngineConfig", "HostSpec", "HostState",
    "LoadState", "MosloConfig", "RegressionModel", "ResourceWeights", "SimulationResult",
    "ThresholdPair", "UtilizationSample", "Verdict", "VmSpec", "WorkloadTrace", "classify",
    "detect", "fit_ols", "generate_random_workload", "load_score", "load_trace",
    "predict_utilization", "regression_target", "render_trace", "run_simulation",
    "select_thresholds", "step", "validate_cluster",
]
