"""Host load classification.

`detect_mr_moslo` combines a one-step-ahead multiple regression forecast with
swarm-selected adaptive thresholds.  The THR, IQR, MAD and LR baselines only
decide overload; underload for them is chosen cluster-wide by the engine.

Every detector returns a `Verdict`, which also keeps what is needed to
re-check a host after VMs are hypothetically removed from it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .domain import LoadState, UtilizationSample
from .moslo import MosloConfig, NoValidThresholdError, ThresholdPair, select_thresholds
from .regression import (
    RegressionModel,
    ResourceWeights,
    SingularFitError,
    fit_ols,
    one_step_rows,
    predict_utilization,
    regression_target,
)

FALLBACK_THRESHOLDS = ThresholdPair(0.1, 0.9)


class DetectorKind(enum.Enum):
    MR_MOSLO = "mr-moslo"
    THR = "thr"
    IQR = "iqr"
    MAD = "mad"
    LR = "lr"


DEFAULT_SAFETY = {DetectorKind.IQR: 1.5, DetectorKind.MAD: 2.5, DetectorKind.LR: 1.2}


@dataclass(frozen=True)
class DetectorConfig:
    kind: DetectorKind = DetectorKind.MR_MOSLO
    static_threshold: float = 0.8
    safety: float | None = None  # None picks the per-kind default
    moslo: MosloConfig = MosloConfig()
    weights: ResourceWeights = ResourceWeights()
    target: str = "normalized"

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", DetectorKind(self.kind))
        if not 0.0 < self.static_threshold < 1.0:
            raise ValueError("static_threshold must lie in (0, 1)")
        if self.safety is not None and self.safety < 1.0:
            raise ValueError("safety must be >= 1")
        if self.target not in ("normalized", "raw_y"):
            raise ValueError(f"unknown regression target {self.target!r}")

    @property
    def effective_safety(self) -> float:
        if self.safety is not None:
            return self.safety
        return DEFAULT_SAFETY.get(self.kind, 1.0)


@dataclass(frozen=True)
class Verdict:
    state: LoadState
    predicted: float | None = None
    thresholds: ThresholdPair | None = None
    threshold: float | None = None  # single overload threshold of THR/IQR/MAD
    model: RegressionModel | None = None
    flags: tuple[str, ...] = field(default=())


def classify(predicted: float, thresholds: ThresholdPair) -> LoadState:
    if predicted >= thresholds.th_upper:
        return LoadState.OVERLOADED
    if predicted <= thresholds.th_low:
        return LoadState.UNDERLOADED
    return LoadState.NORMAL


def detect_mr_moslo(
    history: Sequence[UtilizationSample],
    config: DetectorConfig = DetectorConfig(),
    rng: np.random.Generator | None = None,
) -> Verdict:
    if len(history) < 2:
        return Verdict(LoadState.NORMAL, flags=("warmup",))
    flags = []
    latest = history[-1]
    model = None
    try:
        model = fit_ols(one_step_rows(history, config.weights, config.target))
        predicted = predict_utilization(model, latest)
    except SingularFitError:
        predicted = regression_target(latest, config.weights, config.target)
        flags.append("singular-fit")
    try:
        thresholds = select_thresholds(history, config.moslo, rng)
    except NoValidThresholdError:
        thresholds = FALLBACK_THRESHOLDS
        flags.append("threshold-fallback")
    return Verdict(classify(predicted, thresholds), predicted, thresholds, model=model, flags=tuple(flags))


def detect_thr(history: Sequence[UtilizationSample], static_threshold: float = 0.8) -> Verdict:
    if not history:
        raise ValueError("empty history")
    cpu = history[-1].cpu
    state = LoadState.OVERLOADED if cpu >= static_threshold else LoadState.NORMAL
    return Verdict(state, predicted=cpu, threshold=static_threshold)


def interquartile_range(values) -> float:
    q1, q3 = np.percentile(np.asarray(values, dtype=float), [25, 75])
    return float(q3 - q1)


def median_absolute_deviation(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.median(np.abs(v - np.median(v))))


def _spread_detector(history, safety: float, spread_fn) -> Verdict:
    if len(history) < 4:
        return Verdict(LoadState.NORMAL, flags=("warmup",))
    cpu = [s.cpu for s in history]
    threshold = 1.0 - safety * spread_fn(cpu)
    state = LoadState.OVERLOADED if cpu[-1] >= threshold else LoadState.NORMAL
    return Verdict(state, predicted=cpu[-1], threshold=threshold)


def detect_iqr(history: Sequence[UtilizationSample], safety: float = 1.5) -> Verdict:
    return _spread_detector(history, safety, interquartile_range)


def detect_mad(history: Sequence[UtilizationSample], safety: float = 2.5) -> Verdict:
    return _spread_detector(history, safety, median_absolute_deviation)


def lr_forecast(cpu: Sequence[float]) -> float:
    """Least-squares line through (t, cpu[t]) extrapolated to t = len(cpu)."""
    y = np.asarray(cpu, dtype=float)
    t = np.arange(len(y), dtype=float)
    tc = t - t.mean()
    slope = float(tc @ (y - y.mean()) / (tc @ tc))
    return float(y.mean() + slope * (len(y) - t.mean()))


def detect_lr(history: Sequence[UtilizationSample], safety: float = 1.2) -> Verdict:
    if len(history) < 3:
        return Verdict(LoadState.NORMAL, flags=("warmup",))
    predicted = lr_forecast([s.cpu for s in history])
    state = LoadState.OVERLOADED if safety * predicted >= 1.0 else LoadState.NORMAL
    return Verdict(state, predicted=predicted)


def detect(
    history: Sequence[UtilizationSample],
    config: DetectorConfig,
    rng: np.random.Generator | None = None,
) -> Verdict:
    kind = config.kind
    if kind is DetectorKind.MR_MOSLO:
        return detect_mr_moslo(history, config, rng)
    if kind is DetectorKind.THR:
        return detect_thr(history, config.static_threshold)
    if kind is DetectorKind.IQR:
        return detect_iqr(history, config.effective_safety)
    if kind is DetectorKind.MAD:
        return detect_mad(history, config.effective_safety)
    if kind is DetectorKind.LR:
        return detect_lr(history, config.effective_safety)
    raise ValueError(f"unknown detector {kind!r}")


def still_overloaded(
    verdict: Verdict,
    history: Sequence[UtilizationSample],
    config: DetectorConfig,
) -> bool:
    """Re-check overload after the latest sample was adjusted for removed VMs.

    Thresholds from the original verdict are kept; only the compared value is
    recomputed from the adjusted history.
    """
    latest = history[-1]
    kind = config.kind
    if kind is DetectorKind.MR_MOSLO:
        if verdict.thresholds is None:
            return False
        if verdict.model is not None:
            predicted = predict_utilization(verdict.model, latest)
        else:
            predicted = regression_target(latest, config.weights, config.target)
        return predicted >= verdict.thresholds.th_upper
    if kind is DetectorKind.LR:
        if len(history) < 3:
            return False
        return config.effective_safety * lr_forecast([s.cpu for s in history]) >= 1.0
    if verdict.threshold is None:
        return False
    return latest.cpu >= verdict.threshold


def with_state(verdict: Verdict, state: LoadState) -> Verdict:
    return replace(verdict, state=state)
