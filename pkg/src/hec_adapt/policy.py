"""Tier-selection policy: a small softmax network trained as a contextual
bandit with the REINFORCE estimator.

Training uses epsilon-greedy exploration (linear decay to zero), a
best-observed-reward baseline tracked per context, L2 regularization and
plain SGD. Action selection at evaluation time is pure argmax.

One departure from the obvious flat-learning-rate setup, found necessary
in practice: a small rate while exploration is active keeps the softmax
from saturating on a wrong arm (a saturated argmax policy cannot recover,
because the log-likelihood gradient of the incumbent scales with 1 - s),
and a larger rate in the pure-greedy phase lets the negative-advantage
updates correct any remaining misranking quickly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .features import STATE_DIM

N_ACTIONS = 3
HIDDEN_UNITS = 100


@dataclass(frozen=True)
class PolicyTrainConfig:
    episodes: int = 6000
    epsilon0: float = 0.5
    epsilon_zero_episode: int = 3000
    gamma_l2: float = 1e-3
    learning_rate: float = 0.001
    greedy_learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon0 <= 1.0:
            raise ValueError("epsilon0 must be in [0, 1]")
        if self.epsilon_zero_episode > self.episodes:
            raise ValueError("epsilon_zero_episode must not exceed episodes")
        if self.learning_rate <= 0 or self.greedy_learning_rate <= 0:
            raise ValueError("learning rates must be positive")
        if self.gamma_l2 < 0:
            raise ValueError("gamma_l2 must be nonnegative")


@dataclass(frozen=True)
class BanditEnv:
    """Precomputed single-step environment: one context row per window with
    the reward of every action."""

    states: np.ndarray        # (n, state_dim)
    rewards: np.ndarray       # (n, n_actions)
    window_indices: tuple[int, ...]

    def __post_init__(self):
        if self.states.ndim != 2 or self.rewards.ndim != 2:
            raise ValueError("states and rewards must be 2-D")
        if self.states.shape[0] != self.rewards.shape[0]:
            raise ValueError("states and rewards must have one row per window")
        if self.states.shape[0] == 0:
            raise ValueError("bandit environment is empty")
        if not (np.all(np.isfinite(self.states)) and np.all(np.isfinite(self.rewards))):
            raise ValueError("environment contains non-finite values")

    @property
    def n_contexts(self) -> int:
        return self.states.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]


class BaselineTracker:
    """Best observed reward so far, tracked per context key.

    A context key of None is the shared global slot. Values are
    non-decreasing; the first observation of a key initializes it.
    """

    def __init__(self):
        self._best: dict = {}

    def best(self, context=None) -> float | None:
        return self._best.get(context)

    def observe(self, reward: float, context=None) -> None:
        current = self._best.get(context)
        if current is None or reward > current:
            self._best[context] = reward

    def advantage(self, reward: float, context=None) -> float:
        """reward - best-so-far; zero when this context has no history."""
        current = self._best.get(context)
        return 0.0 if current is None else reward - current


def policy_layer_specs(state_dim: int = STATE_DIM, hidden: int = HIDDEN_UNITS,
                       actions: int = N_ACTIONS) -> tuple[nn.LayerSpec, ...]:
    return (
        nn.LayerSpec(state_dim, hidden, "tanh"),
        nn.LayerSpec(hidden, actions, "softmax"),
    )


def init_policy(seed: int, state_dim: int = STATE_DIM, hidden: int = HIDDEN_UNITS,
                actions: int = N_ACTIONS) -> nn.NetworkParams:
    return nn.init_network(policy_layer_specs(state_dim, hidden, actions), seed)


def policy_forward(params: nn.NetworkParams, state: np.ndarray) -> np.ndarray:
    """Likelihood vector over actions (deterministic softmax forward)."""
    state = np.asarray(state, dtype=float)
    if state.shape != (params.input_dim,):
        raise ValueError(f"state shape {state.shape} != ({params.input_dim},)")
    return nn.forward(params, state, mode="infer").output


def select_action(likelihoods: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy: uniform with probability epsilon, else argmax
    (ties broken toward the lowest index)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(len(likelihoods)))
    return int(np.argmax(likelihoods))


def epsilon_at(episode: int, config: PolicyTrainConfig) -> float:
    """Linear decay from epsilon0 to 0 at epsilon_zero_episode, 0 after."""
    if episode < 0:
        raise ValueError("episode must be nonnegative")
    if config.epsilon_zero_episode <= 0 or episode >= config.epsilon_zero_episode:
        return 0.0
    value = config.epsilon0 * (1.0 - episode / config.epsilon_zero_episode)
    return float(min(config.epsilon0, max(0.0, value)))


def reinforce_update(
    params: nn.NetworkParams,
    state: np.ndarray,
    action: int,
    reward_value: float,
    baseline: BaselineTracker,
    config: PolicyTrainConfig,
    context=None,
    learning_rate: float | None = None,
) -> nn.NetworkParams:
    """One SGD step on -(R - R_best) * log s[action] + (gamma/2)||theta||^2,
    then fold the reward into the baseline."""
    if not np.isfinite(reward_value):
        raise ValueError("reward must be finite")
    advantage = baseline.advantage(reward_value, context)
    trace = nn.forward(params, np.asarray(state, dtype=float), mode="infer")
    grads = nn.backward_logprob(params, trace, action, scale=-advantage,
                                l2_lambda=config.gamma_l2)
    lr = config.learning_rate if learning_rate is None else learning_rate
    new_params = nn.sgd_step(params, grads, lr)
    baseline.observe(reward_value, context)
    return new_params


@dataclass
class EpisodeRecord:
    episode: int
    epsilon: float
    window_index: int
    action: int
    reward: float
    baseline: float


@dataclass
class PolicyTrainResult:
    params: nn.NetworkParams
    log: list[EpisodeRecord] = field(default_factory=list)


def train_policy(env: BanditEnv, config: PolicyTrainConfig) -> PolicyTrainResult:
    """Run the configured number of single-step episodes.

    Each episode samples a context uniformly (seeded), picks an action via
    epsilon-greedy on the current policy, looks up the precomputed reward
    and applies the REINFORCE update. Deterministic per seed.
    """
    params = init_policy(config.seed, state_dim=env.states.shape[1],
                         actions=env.n_actions)
    baseline = BaselineTracker()
    rng = np.random.default_rng(config.seed + 1)
    result = PolicyTrainResult(params=params)
    for episode in range(config.episodes):
        eps = epsilon_at(episode, config)
        i = int(rng.integers(env.n_contexts))
        likelihoods = policy_forward(params, env.states[i])
        action = select_action(likelihoods, eps, rng)
        reward_value = float(env.rewards[i, action])
        lr = config.learning_rate if eps > 0.0 else config.greedy_learning_rate
        params = reinforce_update(params, env.states[i], action, reward_value,
                                  baseline, config, context=i, learning_rate=lr)
        result.log.append(EpisodeRecord(
            episode=episode,
            epsilon=eps,
            window_index=env.window_indices[i],
            action=action,
            reward=reward_value,
            baseline=float(baseline.best(i)),
        ))
    result.params = params
    return result


def greedy_action(params: nn.NetworkParams, state: np.ndarray) -> int:
    """Evaluation-time action: argmax of the likelihoods (epsilon 0)."""
    return int(np.argmax(policy_forward(params, state)))


def save_policy(params: nn.NetworkParams, directory: str | Path) -> None:
    """Persist policy parameters plus a header recording the action count
    and the feature ordering of the context vector."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nn.save_params(params, directory / "params.bin")
    meta = {
        "actions": params.output_dim,
        "state_dim": params.input_dim,
        "feature_order": "per day, days 0-6: (min, max, mean, std) of the standardized samples",
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_policy(directory: str | Path) -> nn.NetworkParams:
    directory = Path(directory)
    params = nn.load_params(directory / "params.bin")
    meta = json.loads((directory / "meta.json").read_text())
    if meta["actions"] != params.output_dim or meta["state_dim"] != params.input_dim:
        raise ValueError(f"{directory}: meta.json does not match the parameter file")
    return params
