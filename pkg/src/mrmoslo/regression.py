"""Multiple regression of host load on cpu, ram and bandwidth utilization.

The load score of a host is the product ``w1/(1-cpu) * w2/(1-ram) * w3/(1-bw)``.
It is unbounded, so the regression target is mapped back to a utilization
scale as ``1 - 1/score``; with unit weights a host using a single resource at
level ``u`` gets target ``u``.  An ordinary least squares fit of that target
on the three utilizations gives the predicting equation
``b0 + b1*cpu + b2*ram + b3*bw``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import UtilizationSample

UTIL_CEILING = 1.0 - 1e-6
COLUMNS = ("intercept", "cpu", "ram", "bw")


class SingularFitError(ValueError):
    """The design matrix is rank deficient; `column` names the first dependent column."""

    def __init__(self, column: str, message: str | None = None):
        super().__init__(message or f"singular regression: column {column!r} is linearly dependent")
        self.column = column


@dataclass(frozen=True)
class ResourceWeights:
    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0

    def __post_init__(self):
        for w in (self.w1, self.w2, self.w3):
            if not 0.0 < w <= 1.0:
                raise ValueError(f"resource weights must lie in (0, 1], got {w}")


@dataclass(frozen=True)
class RegressionModel:
    b0: float
    b1: float
    b2: float
    b3: float
    n_samples: int = 0

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.b0, self.b1, self.b2, self.b3)


def load_score(sample: UtilizationSample, weights: ResourceWeights = ResourceWeights()) -> float:
    cpu = min(sample.cpu, UTIL_CEILING)
    ram = min(sample.ram, UTIL_CEILING)
    bw = min(sample.bw, UTIL_CEILING)
    return (weights.w1 / (1.0 - cpu)) * (weights.w2 / (1.0 - ram)) * (weights.w3 / (1.0 - bw))


def regression_target(
    sample: UtilizationSample,
    weights: ResourceWeights = ResourceWeights(),
    target: str = "normalized",
) -> float:
    """Regression target for one host sample.

    ``target="normalized"`` (default) returns ``1 - 1/score`` clamped into
    ``[0, 1 - 1e-6]``; ``target="raw_y"`` returns the load score itself.
    """
    y = load_score(sample, weights)
    if target == "raw_y":
        return y
    if target != "normalized":
        raise ValueError(f"unknown regression target {target!r}")
    return min(UTIL_CEILING, max(0.0, 1.0 - 1.0 / y))


def _design(rows: Sequence[tuple[UtilizationSample, float]]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([s.as_tuple() for s, _ in rows], dtype=float).reshape(-1, 3)
    y = np.array([t for _, t in rows], dtype=float)
    return x, y


def _first_dependent_column(x: np.ndarray) -> str | None:
    a = np.column_stack([np.ones(len(x)), x])
    scale = max(1.0, float(np.abs(a).max()))
    tol = max(a.shape) * np.finfo(float).eps * scale * 16
    for k in range(1, a.shape[1] + 1):
        sv = np.linalg.svd(a[:, :k], compute_uv=False)
        if sv[-1] <= tol * sv[0]:
            return COLUMNS[k - 1]
    return None


def fit_ols(rows: Sequence[tuple[UtilizationSample, float]]) -> RegressionModel:
    """Least squares fit of target on (cpu, ram, bw) with an intercept.

    The slopes are solved on mean-centred data and the intercept recovered
    from the means, so the fitted plane always passes through the centroid.
    Raises `SingularFitError` for fewer than 4 rows or a rank-deficient design.
    """
    if len(rows) < 4:
        raise SingularFitError("intercept", f"need at least 4 rows for 4 coefficients, got {len(rows)}")
    x, y = _design(rows)
    dependent = _first_dependent_column(x)
    if dependent is not None:
        raise SingularFitError(dependent)
    x_mean = x.mean(axis=0)
    y_mean = y.mean()
    xc = x - x_mean
    yc = y - y_mean
    slopes, *_ = np.linalg.lstsq(xc, yc, rcond=None)
    # one refinement step against the residual tightens the solution for ill-conditioned windows
    correction, *_ = np.linalg.lstsq(xc, yc - xc @ slopes, rcond=None)
    slopes = slopes + correction
    b0 = y_mean - float(slopes @ x_mean)
    return RegressionModel(float(b0), *map(float, slopes), n_samples=len(rows))


def predict_utilization(model: RegressionModel, sample: UtilizationSample) -> float:
    return model.b0 + model.b1 * sample.cpu + model.b2 * sample.ram + model.b3 * sample.bw


def one_step_rows(
    history: Sequence[UtilizationSample],
    weights: ResourceWeights = ResourceWeights(),
    target: str = "normalized",
) -> list[tuple[UtilizationSample, float]]:
    """Pair each sample with the target of the sample that follows it."""
    return [
        (history[t], regression_target(history[t + 1], weights, target))
        for t in range(len(history) - 1)
    ]
