"""Adaptive anomaly detection for 3-tier hierarchical edge computing.

Three reconstruction autoencoders of increasing capacity (device, edge,
cloud), a contextual-bandit policy that picks the execution tier per week
of sensor data, and a simulator that scores the fixed, successive and
adaptive schemes on delay and detection quality.
"""

from .backend import available_backends, default_backend_name
from .cost import CostConfig, DelayBreakdown, TierSpec, default_tiers
from .data import LabeledSeries, SplitPlan, StandardizationStats, WeekWindow
from .detectors import ModelSpec, TrainedDetector, standard_specs, train_detector
from .policy import BanditEnv, PolicyTrainConfig, train_policy
from .scoring import DayVerdict, ErrorModel, classify_days, fit_error_model
from .simulator import Deployment, EvalReport, evaluate_schemes

__version__ = "0.1.0"

__all__ = [
    "available_backends",
    "default_backend_name",
    "CostConfig",
    "DelayBreakdown",
    "TierSpec",
    "default_tiers",
    "LabeledSeries",
    "SplitPlan",
    "StandardizationStats",
    "WeekWindow",
    "ModelSpec",
    "TrainedDetector",
    "standard_specs",
    "train_detector",
    "BanditEnv",
    "PolicyTrainConfig",
    "train_policy",
    "DayVerdict",
    "ErrorModel",
    "classify_days",
    "fit_error_model",
    "Deployment",
    "EvalReport",
    "evaluate_schemes",
    "__version__",
]
