"""Labeled week-windowed time series: CSV ingestion, a synthetic power-demand
generator, standardization, and the train/test/policy splits.

All series are sampled every 15 minutes, so a day is 96 steps and a week
window is 672. Day labels carry the ground truth (True = anomalous day).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scoring import DAYS_PER_WEEK, STEPS_PER_DAY, WEEK_STEPS

SAMPLE_PERIOD_MINUTES = 15

# Synthetic generator shape constants. The diurnal profile is a raised
# cosine centered mid-day; weekends run at a fraction of the weekday
# amplitude. Values are pre-standardization units, tuned so the three
# detector capacities separate on the generated data.
PROFILE_BASELINE = 0.1
WEEKDAY_AMPLITUDE = 1.0
WEEKEND_AMPLITUDE = 0.3
DEFAULT_NOISE_SIGMA = 0.08
DEFAULT_SCALE_JITTER = 0.02


@dataclass(frozen=True)
class LabeledSeries:
    """Raw sample stream plus one boolean label per day."""

    samples: np.ndarray
    day_labels: np.ndarray
    sample_period_minutes: int = SAMPLE_PERIOD_MINUTES

    def __post_init__(self):
        if self.samples.size % WEEK_STEPS != 0:
            raise ValueError("series length must be a whole number of weeks")
        if self.day_labels.size != self.weeks * DAYS_PER_WEEK:
            raise ValueError(
                f"expected {self.weeks * DAYS_PER_WEEK} day labels, got {self.day_labels.size}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("series contains non-finite samples")

    @property
    def weeks(self) -> int:
        return self.samples.size // WEEK_STEPS

    def week_samples(self, week: int) -> np.ndarray:
        return self.samples[week * WEEK_STEPS:(week + 1) * WEEK_STEPS]

    def week_labels(self, week: int) -> np.ndarray:
        return self.day_labels[week * DAYS_PER_WEEK:(week + 1) * DAYS_PER_WEEK]

    def abnormal_weeks(self) -> list[int]:
        return [w for w in range(self.weeks) if self.week_labels(w).any()]


@dataclass(frozen=True)
class StandardizationStats:
    mean: float
    std: float

    def __post_init__(self):
        if self.std <= 0:
            raise ValueError("std must be positive")


@dataclass(frozen=True)
class SplitPlan:
    """Week-index splits. detector_train holds only normal weeks; the policy
    train set is all abnormal weeks plus seven normals drawn from the test
    region; the policy is evaluated on every week."""

    detector_train: tuple[int, ...]
    test: tuple[int, ...]
    policy_train: tuple[int, ...]
    policy_test: tuple[int, ...]


@dataclass(frozen=True)
class WeekWindow:
    """One standardized 672-step input window plus its 7 day labels."""

    index: int
    values: np.ndarray
    day_labels: tuple[bool, ...]

    def __post_init__(self):
        if self.values.shape != (WEEK_STEPS,):
            raise ValueError(f"window values must have shape ({WEEK_STEPS},)")
        if len(self.day_labels) != DAYS_PER_WEEK:
            raise ValueError("a window has exactly 7 day labels")


def load_csv(path: str | Path, labels_path: str | Path | None = None) -> LabeledSeries:
    """Read one numeric value per line; truncate to whole weeks.

    The optional label file holds one 0/1 per day. Labels default to
    all-normal when no file is given.
    """
    path = Path(path)
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
    weeks = len(values) // WEEK_STEPS
    if weeks < 1:
        raise ValueError(f"{path}: {len(values)} samples is less than one week ({WEEK_STEPS})")
    samples = np.asarray(values[: weeks * WEEK_STEPS], dtype=float)

    n_days = weeks * DAYS_PER_WEEK
    if labels_path is None:
        labels = np.zeros(n_days, dtype=bool)
    else:
        labels_path = Path(labels_path)
        raw = []
        with open(labels_path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text:
                    continue
                if text not in ("0", "1"):
                    raise ValueError(f"{labels_path}:{lineno}: label must be 0 or 1, got {text!r}")
                raw.append(text == "1")
        if len(raw) < n_days:
            raise ValueError(
                f"{labels_path}: {len(raw)} day labels but the series has {n_days} days"
            )
        labels = np.asarray(raw[:n_days], dtype=bool)
    return LabeledSeries(samples, labels)


def day_profile(amplitude: float) -> np.ndarray:
    """Raised-cosine consumption bump over one day, low at midnight and
    peaking mid-day."""
    i = np.arange(STEPS_PER_DAY)
    bump = 0.5 * (1.0 - np.cos(2.0 * np.pi * i / STEPS_PER_DAY))
    return PROFILE_BASELINE + amplitude * bump


def synthesize(
    weeks: int,
    anomalous_weeks: int,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    seed: int = 0,
    scale_jitter: float = DEFAULT_SCALE_JITTER,
) -> LabeledSeries:
    """Generate a power-demand-like series: five weekday peaks, two weekend
    lows per week, plus Gaussian noise.

    Each week draws one amplitude scale (shared by all its days, so with
    noise_sigma=0 the weekdays of a week are identical waveforms). In each
    anomalous week one uniformly chosen day is flipped to the opposite
    profile (a low-consumption holiday on a weekday, or high weekend
    consumption) and labeled anomalous.
    """
    if weeks < 1:
        raise ValueError("weeks must be positive")
    if not 0 <= anomalous_weeks <= weeks:
        raise ValueError("anomalous_weeks must be between 0 and weeks")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    chosen = sorted(int(w) for w in rng.choice(weeks, size=anomalous_weeks, replace=False))
    flip_day = {w: int(rng.integers(DAYS_PER_WEEK)) for w in chosen}

    samples = np.empty(weeks * WEEK_STEPS)
    labels = np.zeros(weeks * DAYS_PER_WEEK, dtype=bool)
    for week in range(weeks):
        scale = max(0.3, 1.0 + scale_jitter * rng.standard_normal())
        for day in range(DAYS_PER_WEEK):
            weekend = day >= 5
            amplitude = (WEEKEND_AMPLITUDE if weekend else WEEKDAY_AMPLITUDE) * scale
            if flip_day.get(week) == day:
                amplitude = (WEEKDAY_AMPLITUDE if weekend else WEEKEND_AMPLITUDE) * scale
                labels[week * DAYS_PER_WEEK + day] = True
            values = day_profile(amplitude)
            if noise_sigma > 0:
                values = values + noise_sigma * rng.standard_normal(STEPS_PER_DAY)
            start = week * WEEK_STEPS + day * STEPS_PER_DAY
            samples[start:start + STEPS_PER_DAY] = values
    return LabeledSeries(samples, labels)


def fit_stats(samples: np.ndarray) -> StandardizationStats:
    """Mean/std over the detector-train region only (no test leakage)."""
    samples = np.asarray(samples, dtype=float)
    std = float(samples.std())
    if std == 0.0:
        raise ValueError("cannot standardize a constant series")
    return StandardizationStats(mean=float(samples.mean()), std=std)


def standardize(samples: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    return (np.asarray(samples, dtype=float) - stats.mean) / stats.std


def destandardize(samples: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    return np.asarray(samples, dtype=float) * stats.std + stats.mean


def make_splits(series: LabeledSeries, seed: int = 0) -> SplitPlan:
    """70:30 week split with all abnormal weeks forced into the test side.

    detector_train takes the first ceil(0.7 * weeks) normal weeks; the
    policy train set is every abnormal week plus 7 normal weeks sampled
    (seeded) from the test region.
    """
    weeks = series.weeks
    normal = [w for w in range(weeks) if not series.week_labels(w).any()]
    abnormal = series.abnormal_weeks()
    if not abnormal:
        raise ValueError("dataset has no abnormal weeks; the policy train set needs them")
    target = math.ceil(0.7 * weeks)
    detector_train = tuple(normal[:target])
    test = tuple(w for w in range(weeks) if w not in set(detector_train))
    test_normal = [w for w in test if not series.week_labels(w).any()]
    if len(test_normal) < 7:
        raise ValueError(
            f"need at least 7 normal weeks outside the detector train split, found {len(test_normal)}"
        )
    rng = np.random.default_rng(seed)
    picked = sorted(int(w) for w in rng.choice(test_normal, size=7, replace=False))
    policy_train = tuple(sorted(abnormal + picked))
    return SplitPlan(
        detector_train=detector_train,
        test=test,
        policy_train=policy_train,
        policy_test=tuple(range(weeks)),
    )


def series_windows(series: LabeledSeries, stats: StandardizationStats) -> list[WeekWindow]:
    """Standardize the series and cut it into per-week windows."""
    z = standardize(series.samples, stats)
    windows = []
    for w in range(series.weeks):
        values = np.ascontiguousarray(z[w * WEEK_STEPS:(w + 1) * WEEK_STEPS])
        labels = tuple(bool(v) for v in series.week_labels(w))
        windows.append(WeekWindow(index=w, values=values, day_labels=labels))
    return windows
