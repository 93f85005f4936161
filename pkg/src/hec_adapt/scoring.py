"""Anomaly scoring: Gaussian error model, log-density scores, day verdicts.

Per-step reconstruction errors of a trained detector are modeled with a
univariate Gaussian fitted on the detector's own (normal-only) training
data. The anomaly score of an error value is its log probability density
under that Gaussian; the detection threshold is the minimum score observed
on the training data, so the training set itself never raises an alarm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nn

DAYS_PER_WEEK = 7
STEPS_PER_DAY = 96
WEEK_STEPS = DAYS_PER_WEEK * STEPS_PER_DAY

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ErrorModel:
    """Gaussian over per-step reconstruction errors plus the alarm threshold."""

    mu: float
    sigma: float
    threshold: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class DayVerdict:
    """Per-day outcome of scoring one week window."""

    anomalous: tuple[bool, ...]
    min_log_density: tuple[float, ...]
    threshold: float

    def __post_init__(self):
        if len(self.anomalous) != DAYS_PER_WEEK or len(self.min_log_density) != DAYS_PER_WEEK:
            raise ValueError("a verdict covers exactly 7 days")

    @property
    def any_anomalous(self) -> bool:
        return any(self.anomalous)


def log_density(model: ErrorModel, e) -> np.ndarray | float:
    """Log pdf of N(mu, sigma^2) at e. Vectorizes over arrays."""
    e = np.asarray(e, dtype=float)
    z = (e - model.mu) / model.sigma
    out = -0.5 * z * z - math.log(model.sigma) - 0.5 * _LOG_2PI
    return float(out) if out.ndim == 0 else out


def fit_error_model(errors) -> ErrorModel:
    """Fit mu/sigma (population form) and set threshold = min log-density.

    Degenerate inputs (fewer than two samples, or all identical so sigma
    would be zero) are rejected; callers should add a noise floor to their
    reconstruction errors rather than fit a spike.
    """
    errors = np.asarray(errors, dtype=float).ravel()
    if errors.size < 2:
        raise ValueError("need at least 2 error samples to fit an error model")
    mu = float(errors.mean())
    sigma = float(errors.std())
    if sigma == 0.0:
        raise ValueError(
            "error samples are all identical (sigma would be 0); add a noise floor to the errors"
        )
    partial = ErrorModel(mu, sigma, threshold=0.0)
    threshold = float(np.min(log_density(partial, errors)))
    return ErrorModel(mu, sigma, threshold)


def reconstruction_errors(detector, window: np.ndarray) -> np.ndarray:
    """Per-step |x - x_hat| for one window under the detector's network."""
    window = np.asarray(window, dtype=float)
    trace = nn.forward(detector.params, window, mode="infer")
    return np.abs(window - trace.output)


def classify_days(detector, window: np.ndarray) -> DayVerdict:
    """Score one 672-step window day by day.

    A day is anomalous iff the minimum log-density over its 96 steps falls
    below the detector's threshold (at least one sufficiently unlikely
    data point).
    """
    window = np.asarray(window, dtype=float)
    if window.shape != (WEEK_STEPS,):
        raise ValueError(
            f"window must have {WEEK_STEPS} steps (7 days x 96), got shape {window.shape}"
        )
    model = detector.error_model
    scores = log_density(model, reconstruction_errors(detector, window))
    day_min = scores.reshape(DAYS_PER_WEEK, STEPS_PER_DAY).min(axis=1)
    return DayVerdict(
        anomalous=tuple(bool(v < model.threshold) for v in day_min),
        min_log_density=tuple(float(v) for v in day_min),
        threshold=model.threshold,
    )


def is_confident(verdict: DayVerdict, factor: float) -> bool:
    """Confidence test for the successive-offloading scheme.

    Every anomalous day must beat the threshold by the given factor, i.e.
    its minimum log-density must be at least factor times as extreme
    (thresholds are negative in practice, so multiplying deepens them).
    Verdicts with no anomalous day are confident at any factor.
    """
    if factor < 1:
        raise ValueError("confidence factor must be >= 1")
    bar = factor * verdict.threshold
    return all(
        (not anom) or (mld <= bar)
        for anom, mld in zip(verdict.anomalous, verdict.min_log_density)
    )
