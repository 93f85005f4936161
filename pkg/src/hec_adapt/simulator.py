"""Run the detection schemes over a dataset and account their delays.

Schemes: fixed execution at one tier, successive offloading with a
confidence test, and the adaptive policy. Per-window detector verdicts are
precomputed once and shared across schemes (and across alpha values when
sweeping), since they do not depend on the scheme.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import cost, nn, policy, scoring
from .cost import TierSpec
from .data import WeekWindow
from .detectors import TrainedDetector
from .features import extract_state
from .scoring import DAYS_PER_WEEK, DayVerdict

THREADS_ENV_VAR = "HEC_ADAPT_THREADS"

FIXED_SCHEMES = ("fixed-iot", "fixed-edge", "fixed-cloud")
STANDARD_SCHEMES = FIXED_SCHEMES + ("successive-2", "successive-4", "adaptive")


@dataclass(frozen=True)
class Deployment:
    """The trained detectors bound to their execution tiers (index k runs
    detector k on tier k)."""

    detectors: tuple[TrainedDetector, ...]
    tiers: tuple[TierSpec, ...]

    def __post_init__(self):
        if len(self.detectors) != len(self.tiers):
            raise ValueError("need exactly one detector per tier")
        if not self.detectors:
            raise ValueError("deployment is empty")
        for k, tier in enumerate(self.tiers, start=1):
            if tier.tier_index != k:
                raise ValueError(f"tiers must be ordered 1..K, got {tier.tier_index} at position {k}")

    @property
    def n_tiers(self) -> int:
        return len(self.tiers)

    def delay(self, tier_pos: int) -> cost.DelayBreakdown:
        """Total delay of running detector tier_pos (0-based) at its tier."""
        return cost.total_delay(self.detectors[tier_pos].spec.flop, self.tiers[tier_pos])

    def compute_ms(self, tier_pos: int) -> float:
        return cost.compute_delay_ms(self.detectors[tier_pos].spec.flop, self.tiers[tier_pos])


@dataclass(frozen=True)
class WindowEvaluation:
    """Scheme-independent per-window facts: context state, each tier's
    verdict and its day-level accuracy."""

    index: int
    state: np.ndarray
    labels: tuple[bool, ...]
    verdicts: tuple[DayVerdict, ...]

    def correct_days(self, tier_pos: int) -> int:
        verdict = self.verdicts[tier_pos]
        return sum(p == t for p, t in zip(verdict.anomalous, self.labels))

    def accuracy(self, tier_pos: int) -> float:
        return self.correct_days(tier_pos) / DAYS_PER_WEEK


def _eval_window(deployment: Deployment, window: WeekWindow) -> WindowEvaluation:
    verdicts = tuple(scoring.classify_days(det, window.values) for det in deployment.detectors)
    return WindowEvaluation(
        index=window.index,
        state=extract_state(window.values),
        labels=window.day_labels,
        verdicts=verdicts,
    )


def evaluation_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None
    return max(1, n)


def precompute_evaluations(
    deployment: Deployment,
    windows: Sequence[WeekWindow],
    threads: int | None = None,
) -> list[WindowEvaluation]:
    """Classify every window under every detector, optionally in parallel.

    Results come back in window order regardless of thread count, so all
    downstream aggregation is deterministic.
    """
    if threads is None:
        threads = evaluation_threads()
    if threads <= 1 or len(windows) <= 1:
        return [_eval_window(deployment, w) for w in windows]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda w: _eval_window(deployment, w), windows))


class Metrics(NamedTuple):
    tn: int
    fp: int
    fn: int
    tp: int
    f1: float
    accuracy: float


def compute_metrics(day_predictions: Sequence[bool], day_labels: Sequence[bool]) -> Metrics:
    """Day-level binary metrics with anomalous as the positive class.

    F1 is 2tp / (2tp + fp + fn), taken as 0 when the denominator is 0.
    """
    if len(day_predictions) != len(day_labels):
        raise ValueError("predictions and labels differ in length")
    tn = fp = fn = tp = 0
    for pred, label in zip(day_predictions, day_labels):
        if label and pred:
            tp += 1
        elif label:
            fn += 1
        elif pred:
            fp += 1
        else:
            tn += 1
    denom = 2 * tp + fp + fn
    f1 = (2 * tp / denom) if denom else 0.0
    total = tn + fp + fn + tp
    accuracy = (tn + tp) / total if total else 0.0
    return Metrics(tn, fp, fn, tp, f1, accuracy)


@dataclass(frozen=True)
class WindowTrace:
    window_index: int
    tier: int                      # 1-based tier that produced the verdict
    delay_ms: float
    predicted: tuple[bool, ...]
    reward: float


@dataclass
class EvalReport:
    scheme: str
    metrics: Metrics
    total_reward: float
    avg_delay_ms: float
    trace: list[WindowTrace] = field(default_factory=list)

    @property
    def f1(self) -> float:
        return self.metrics.f1

    @property
    def accuracy(self) -> float:
        return self.metrics.accuracy


def _aggregate(scheme: str, evals: Sequence[WindowEvaluation],
               choices: Sequence[int], delays: Sequence[float], alpha: float) -> EvalReport:
    """Fold per-window (tier choice, delay) into a report. Reward
    accumulates in window order, so schemes with identical choices produce
    bit-identical totals."""
    predictions: list[bool] = []
    labels: list[bool] = []
    total_reward = 0.0
    trace = []
    for ev, tier_pos, delay_ms in zip(evals, choices, delays):
        verdict = ev.verdicts[tier_pos]
        predictions.extend(verdict.anomalous)
        labels.extend(ev.labels)
        r = ev.accuracy(tier_pos) - cost.delay_cost(delay_ms, alpha)
        total_reward += r
        trace.append(WindowTrace(ev.index, tier_pos + 1, delay_ms, verdict.anomalous, r))
    metrics = compute_metrics(predictions, labels)
    avg_delay = float(np.mean(delays)) if delays else 0.0
    return EvalReport(scheme=scheme, metrics=metrics, total_reward=total_reward,
                      avg_delay_ms=avg_delay, trace=trace)


def _ensure_evals(deployment, windows, evals):
    return precompute_evaluations(deployment, windows) if evals is None else evals


def run_fixed(
    deployment: Deployment,
    tier_index: int,
    windows: Sequence[WeekWindow],
    alpha: float,
    evals: Sequence[WindowEvaluation] | None = None,
) -> EvalReport:
    """Every window evaluated by the detector of one tier (1-based)."""
    if not 1 <= tier_index <= deployment.n_tiers:
        raise ValueError(f"tier_index must be in 1..{deployment.n_tiers}")
    evals = _ensure_evals(deployment, windows, evals)
    pos = tier_index - 1
    delay = deployment.delay(pos).total_ms
    name = FIXED_SCHEMES[pos] if pos < len(FIXED_SCHEMES) else f"fixed-{tier_index}"
    return _aggregate(name, evals, [pos] * len(evals), [delay] * len(evals), alpha)


def run_successive(
    deployment: Deployment,
    factor: float,
    windows: Sequence[WeekWindow],
    alpha: float,
    evals: Sequence[WindowEvaluation] | None = None,
) -> EvalReport:
    """Start at tier 1 and escalate while the verdict fails the confidence
    test, stopping at the cloud.

    Tiers are on-path in this topology: compute time is paid at every
    visited tier, network latency once, for the deepest tier reached.
    """
    evals = _ensure_evals(deployment, windows, evals)
    choices, delays = [], []
    for ev in evals:
        final = deployment.n_tiers - 1
        delay = 0.0
        for pos in range(deployment.n_tiers):
            delay += deployment.compute_ms(pos)
            if scoring.is_confident(ev.verdicts[pos], factor) or pos == deployment.n_tiers - 1:
                final = pos
                break
        delay += deployment.tiers[final].latency_ms
        choices.append(final)
        delays.append(delay)
    label = int(factor) if float(factor).is_integer() else factor
    return _aggregate(f"successive-{label}", evals, choices, delays, alpha)


def run_adaptive(
    deployment: Deployment,
    policy_params: nn.NetworkParams,
    windows: Sequence[WeekWindow],
    alpha: float,
    evals: Sequence[WindowEvaluation] | None = None,
) -> EvalReport:
    """Pick the tier per window by greedy argmax of the policy network."""
    evals = _ensure_evals(deployment, windows, evals)
    choices, delays = [], []
    for ev in evals:
        pos = policy.greedy_action(policy_params, ev.state)
        if not 0 <= pos < deployment.n_tiers:
            raise ValueError(f"policy chose action {pos} outside the deployment")
        choices.append(pos)
        delays.append(deployment.delay(pos).total_ms)
    return _aggregate("adaptive", evals, choices, delays, alpha)


def build_bandit_env(
    deployment: Deployment,
    windows: Sequence[WeekWindow],
    alpha: float,
    evals: Sequence[WindowEvaluation] | None = None,
) -> policy.BanditEnv:
    """Precompute the policy-training environment: context state per window
    and the reward of sending it to each tier."""
    evals = _ensure_evals(deployment, windows, evals)
    states = np.stack([ev.state for ev in evals])
    rewards = np.empty((len(evals), deployment.n_tiers))
    for i, ev in enumerate(evals):
        for pos in range(deployment.n_tiers):
            rewards[i, pos] = ev.accuracy(pos) - cost.delay_cost(
                deployment.delay(pos).total_ms, alpha
            )
    return policy.BanditEnv(
        states=states,
        rewards=rewards,
        window_indices=tuple(ev.index for ev in evals),
    )


def evaluate_schemes(
    deployment: Deployment,
    windows: Sequence[WeekWindow],
    alpha: float,
    policy_params: nn.NetworkParams | None = None,
    successive_factors: Sequence[float] = (2.0, 4.0),
    evals: Sequence[WindowEvaluation] | None = None,
) -> dict[str, EvalReport]:
    """All standard schemes over one dataset; adaptive only when a trained
    policy is supplied."""
    evals = _ensure_evals(deployment, windows, evals)
    reports: dict[str, EvalReport] = {}
    for k in range(1, deployment.n_tiers + 1):
        report = run_fixed(deployment, k, windows, alpha, evals=evals)
        reports[report.scheme] = report
    for factor in successive_factors:
        report = run_successive(deployment, factor, windows, alpha, evals=evals)
        reports[report.scheme] = report
    if policy_params is not None:
        report = run_adaptive(deployment, policy_params, windows, alpha, evals=evals)
        reports[report.scheme] = report
    return reports


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties. Returns 0
    when either side is constant (no ordering information)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ValueError("need two equal-length 1-D samples")

    def ranks(v: np.ndarray) -> np.ndarray:
        order = np.argsort(v, kind="stable")
        r = np.empty(v.size)
        i = 0
        while i < v.size:
            j = i
            while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
                j += 1
            r[order[i:j + 1]] = 0.5 * (i + j) + 1.0
            i = j + 1
        return r

    rx, ry = ranks(xs), ranks(ys)
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def format_report(report: EvalReport) -> str:
    """Human-readable report document: summary block plus per-window trace."""
    m = report.metrics
    lines = [
        f"scheme: {report.scheme}",
        f"tn: {m.tn}",
        f"fp: {m.fp}",
        f"fn: {m.fn}",
        f"tp: {m.tp}",
        f"f1: {m.f1:.4f}",
        f"accuracy_pct: {100.0 * m.accuracy:.4f}",
        f"total_reward: {report.total_reward:.6f}",
        f"avg_delay_ms: {report.avg_delay_ms:.4f}",
        "",
        "window,tier,delay_ms,reward,predicted_days",
    ]
    for t in report.trace:
        days = "".join("1" if p else "0" for p in t.predicted)
        lines.append(f"{t.window_index},{t.tier},{t.delay_ms:.4f},{t.reward:.6f},{days}")
    return "\n".join(lines) + "\n"


def comparison_rows(reports: dict[str, EvalReport]) -> list[dict[str, str]]:
    """Rows for the delimiter-separated comparison table (one per scheme)."""
    rows = []
    for name in STANDARD_SCHEMES:
        if name not in reports:
            continue
        r = reports[name]
        rows.append({
            "scheme": name,
            "f1": f"{r.f1:.4f}",
            "accuracy_pct": f"{100.0 * r.accuracy:.4f}",
            "total_reward": f"{r.total_reward:.6f}",
            "avg_delay_ms": f"{r.avg_delay_ms:.4f}",
        })
    return rows
