"""Context features for the tier-selection policy.

A week window is summarized by four statistics per day (min, max, mean,
population std), in day order, giving a 28-dimensional state vector. The
statistics are computed on the same standardized series the detectors see.
"""

from __future__ import annotations

import numpy as np

from .scoring import DAYS_PER_WEEK, STEPS_PER_DAY, WEEK_STEPS

STATE_DIM = 4 * DAYS_PER_WEEK


def extract_state(window: np.ndarray) -> np.ndarray:
    """28 features: per day (min, max, mean, std), day-major order."""
    window = np.asarray(window, dtype=float)
    if window.shape != (WEEK_STEPS,):
        raise ValueError(f"window must have {WEEK_STEPS} steps, got shape {window.shape}")
    days = window.reshape(DAYS_PER_WEEK, STEPS_PER_DAY)
    feats = np.stack(
        [days.min(axis=1), days.max(axis=1), days.mean(axis=1), days.std(axis=1)],
        axis=1,
    )
    return feats.reshape(STATE_DIM)
