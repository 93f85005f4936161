"""Delay and reward arithmetic for the three-tier deployment.

Compute delay is model FLOP divided by machine FLOPS; communication delay
is the configured device-to-tier latency. A saturating map converts total
delay into an accuracy-equivalent cost in [0, 1), and the per-window
reward is detection accuracy minus that cost.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TierSpec:
    """One execution tier: index (1 = device), throughput, network latency."""

    tier_index: int
    flops: float
    latency_ms: float

    def __post_init__(self):
        if self.tier_index < 1:
            raise ValueError("tier_index starts at 1")
        if self.flops <= 0:
            raise ValueError("flops must be positive")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be nonnegative")


@dataclass(frozen=True)
class CostConfig:
    alpha: float = 0.0025

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class DelayBreakdown:
    t_comm_ms: float
    t_comp_ms: float

    @property
    def total_ms(self) -> float:
        return self.t_comm_ms + self.t_comp_ms


def default_tiers() -> tuple[TierSpec, TierSpec, TierSpec]:
    """The measured reference deployment: a Raspberry-Pi-class device
    (194 MFLOPS, local), an edge server (197 GFLOPS, 50 ms away) and a
    cloud server (289 GFLOPS, 100 ms away)."""
    return (
        TierSpec(1, 194e6, 0.0),
        TierSpec(2, 197e9, 50.0),
        TierSpec(3, 289e9, 100.0),
    )


def compute_delay_ms(model_flop: float, tier: TierSpec) -> float:
    """Inference compute time in milliseconds: FLOP / FLOPS."""
    if model_flop <= 0:
        raise ValueError("model_flop must be positive")
    return 1000.0 * model_flop / tier.flops


def total_delay(model_flop: float, tier: TierSpec) -> DelayBreakdown:
    """Network latency to the tier plus compute time at the tier."""
    return DelayBreakdown(t_comm_ms=tier.latency_ms, t_comp_ms=compute_delay_ms(model_flop, tier))


def delay_cost(t_ms: float, alpha: float) -> float:
    """Map a delay to an equivalent accuracy loss: alpha*t / (1 + alpha*t).

    Zero at t=0, strictly increasing, approaches 1 as t grows.
    """
    if t_ms < 0:
        raise ValueError("delay must be nonnegative")
    at = alpha * t_ms
    return at / (1.0 + at)


def reward(accuracy: float, delay: DelayBreakdown, alpha: float) -> float:
    """Detection accuracy of the window minus the delay cost."""
    if not 0.0 <= accuracy <= 1.0:
        raise ValueError("accuracy must be in [0, 1]")
    return accuracy - delay_cost(delay.total_ms, alpha)
