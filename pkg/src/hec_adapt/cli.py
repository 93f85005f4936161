"""Operator entry point.

Subcommands: gen-data, train-detectors, train-policy, evaluate, sweep-alpha.
A single JSON config file drives everything; --seed, --alpha and --out
override individual fields (flag > file > default). Every command echoes
the resolved config into its output directory so runs are reproducible.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data, detectors, nn, policy, simulator
from .cost import CostConfig, TierSpec, default_tiers
from .data import LabeledSeries, SplitPlan, StandardizationStats, WeekWindow
from .simulator import Deployment

SWEEP_ALPHA_MIN = 0.0001
SWEEP_ALPHA_MAX = 0.0045
SWEEP_POINTS = 9


@dataclass
class DataConfig:
    csv: str | None = None
    labels: str | None = None
    weeks: int = 52
    anomalous_weeks: int = 8
    noise_sigma: float = data.DEFAULT_NOISE_SIGMA
    scale_jitter: float = data.DEFAULT_SCALE_JITTER
    seed: int = 42


@dataclass
class DetectorConfig:
    learning_rate: float = 0.01
    l2_lambda: float = 1e-4
    dropout_rate: float = 0.3
    epochs: dict[str, int] | None = None  # None: per-spec full budgets
    seed: int = 7


@dataclass
class PolicyConfig:
    episodes: int = 6000
    epsilon0: float = 0.5
    epsilon_zero_episode: int = 3000
    gamma_l2: float = 1e-3
    learning_rate: float = 0.001
    greedy_learning_rate: float = 0.01
    seed: int = 107


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    tiers: list[dict] = field(default_factory=lambda: [
        {"flops": t.flops, "latency_ms": t.latency_ms} for t in default_tiers()
    ])
    alpha: float = 0.0025
    detectors: DetectorConfig = field(default_factory=DetectorConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    split_seed: int = 0
    out_dir: str = "runs/hec"

    def tier_specs(self) -> tuple[TierSpec, ...]:
        if len(self.tiers) != 3:
            raise ValueError(f"config must define exactly 3 tiers, got {len(self.tiers)}")
        return tuple(
            TierSpec(i + 1, float(t["flops"]), float(t["latency_ms"]))
            for i, t in enumerate(self.tiers)
        )

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2) + "\n"


def _merge_dataclass(cls, defaults, overrides: dict):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return dataclasses.replace(defaults, **overrides)


def load_config(path: str | Path | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(doc) - {f.name for f in dataclasses.fields(RunConfig)}
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    if "data" in doc:
        cfg.data = _merge_dataclass(DataConfig, cfg.data, doc["data"])
    if "detectors" in doc:
        cfg.detectors = _merge_dataclass(DetectorConfig, cfg.detectors, doc["detectors"])
    if "policy" in doc:
        cfg.policy = _merge_dataclass(PolicyConfig, cfg.policy, doc["policy"])
    for key in ("tiers", "alpha", "split_seed", "out_dir"):
        if key in doc:
            setattr(cfg, key, doc[key])
    cfg.tier_specs()  # validate early
    CostConfig(alpha=cfg.alpha)
    return cfg


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.seed is not None:
        cfg.detectors = dataclasses.replace(cfg.detectors, seed=args.seed)
        cfg.policy = dataclasses.replace(cfg.policy, seed=args.seed + 100)
    if args.alpha is not None:
        CostConfig(alpha=args.alpha)  # rejects nonpositive values
        cfg.alpha = args.alpha
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _echo_config(cfg: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())


def _load_series(cfg: RunConfig) -> LabeledSeries:
    if cfg.data.csv is not None:
        return data.load_csv(cfg.data.csv, cfg.data.labels)
    return data.synthesize(
        weeks=cfg.data.weeks,
        anomalous_weeks=cfg.data.anomalous_weeks,
        noise_sigma=cfg.data.noise_sigma,
        seed=cfg.data.seed,
        scale_jitter=cfg.data.scale_jitter,
    )


def _prepare(cfg: RunConfig) -> tuple[LabeledSeries, SplitPlan, StandardizationStats, list[WeekWindow]]:
    series = _load_series(cfg)
    splits = data.make_splits(series, seed=cfg.split_seed)
    train_samples = np.concatenate([series.week_samples(w) for w in splits.detector_train])
    stats = data.fit_stats(train_samples)
    windows = data.series_windows(series, stats)
    return series, splits, stats, windows


def _detector_dir(out: Path, name: str) -> Path:
    return out / "detectors" / name.lower().replace("-", "_")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_gen_data(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    _echo_config(cfg, out)
    series = _load_series(cfg)
    data_dir = out / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    with open(data_dir / "series.csv", "w") as fh:
        for v in series.samples:
            fh.write(f"{v!r}\n")
    with open(data_dir / "labels.csv", "w") as fh:
        for v in series.day_labels:
            fh.write(f"{int(v)}\n")
    print(f"wrote {series.weeks} weeks ({series.samples.size} samples, "
          f"{series.day_labels.size} day labels) to {data_dir}")
    return 0


def cmd_train_detectors(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    _echo_config(cfg, out)
    _, splits, _, windows = _prepare(cfg)
    train_windows = [windows[w] for w in splits.detector_train]
    log_rows = []
    for spec in detectors.standard_specs():
        epochs = spec.epochs if cfg.detectors.epochs is None else int(cfg.detectors.epochs[spec.name])
        hyper = nn.TrainHyper(
            learning_rate=cfg.detectors.learning_rate,
            l2_lambda=cfg.detectors.l2_lambda,
            dropout_rate=cfg.detectors.dropout_rate,
            epochs=epochs,
            seed=cfg.detectors.seed,
        )
        det = detectors.train_detector(spec, train_windows, hyper)
        detectors.save_detector(det, _detector_dir(out, spec.name))
        for epoch, loss in enumerate(det.training_log.epoch_losses):
            log_rows.append([spec.name, epoch, f"{loss:.8f}"])
        print(f"trained {spec.name}: {epochs} epochs, "
              f"threshold {det.error_model.threshold:.3f}")
    _write_csv(out / "detectors" / "train_log.csv", ["model", "epoch", "loss"], log_rows)
    return 0


def _load_deployment(cfg: RunConfig, out: Path) -> Deployment:
    dets = []
    for spec in detectors.standard_specs():
        bundle = _detector_dir(out, spec.name)
        if not bundle.exists():
            raise FileNotFoundError(
                f"missing detector bundle {bundle}; run train-detectors first"
            )
        dets.append(detectors.load_detector(bundle))
    return Deployment(detectors=tuple(dets), tiers=cfg.tier_specs())


def cmd_train_policy(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    _echo_config(cfg, out)
    deployment = _load_deployment(cfg, out)
    _, splits, _, windows = _prepare(cfg)
    env = simulator.build_bandit_env(
        deployment, [windows[w] for w in splits.policy_train], cfg.alpha
    )
    config = policy.PolicyTrainConfig(
        episodes=cfg.policy.episodes,
        epsilon0=cfg.policy.epsilon0,
        epsilon_zero_episode=cfg.policy.epsilon_zero_episode,
        gamma_l2=cfg.policy.gamma_l2,
        learning_rate=cfg.policy.learning_rate,
        greedy_learning_rate=cfg.policy.greedy_learning_rate,
        seed=cfg.policy.seed,
    )
    result = policy.train_policy(env, config)
    policy.save_policy(result.params, out / "policy")
    _write_csv(
        out / "policy" / "policy_log.csv",
        ["episode", "epsilon", "window", "action", "reward", "baseline"],
        [
            [r.episode, f"{r.epsilon:.6f}", r.window_index, r.action,
             f"{r.reward:.6f}", f"{r.baseline:.6f}"]
            for r in result.log
        ],
    )
    print(f"trained policy: {config.episodes} episodes over {env.n_contexts} windows")
    return 0


def _write_comparison(path: Path, reports: dict[str, simulator.EvalReport]) -> None:
    rows = simulator.comparison_rows(reports)
    _write_csv(path, list(rows[0].keys()), [list(r.values()) for r in rows])


def cmd_evaluate(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    _echo_config(cfg, out)
    deployment = _load_deployment(cfg, out)
    policy_dir = out / "policy"
    if not policy_dir.exists():
        raise FileNotFoundError(f"missing policy bundle {policy_dir}; run train-policy first")
    policy_params = policy.load_policy(policy_dir)
    _, splits, _, windows = _prepare(cfg)

    eval_dir = out / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    all_windows = [windows[w] for w in splits.policy_test]
    evals = simulator.precompute_evaluations(deployment, all_windows)
    reports = simulator.evaluate_schemes(
        deployment, all_windows, cfg.alpha, policy_params=policy_params, evals=evals
    )
    for name, report in reports.items():
        (eval_dir / f"report_{name.replace('-', '_')}.txt").write_text(
            simulator.format_report(report)
        )
    _write_comparison(eval_dir / "comparison.csv", reports)

    # Same schemes restricted to the held-out detector-test weeks, for a
    # leakage-free view (the main table follows the whole-dataset protocol).
    held = [windows[w] for w in splits.test]
    held_reports = simulator.evaluate_schemes(
        deployment, held, cfg.alpha, policy_params=policy_params
    )
    _write_comparison(eval_dir / "comparison_heldout.csv", held_reports)

    for row in simulator.comparison_rows(reports):
        print(f"{row['scheme']:>14}: f1={row['f1']} acc%={row['accuracy_pct']} "
              f"reward={row['total_reward']} delay_ms={row['avg_delay_ms']}")
    return 0


def default_alpha_grid() -> list[float]:
    return [float(a) for a in np.linspace(SWEEP_ALPHA_MIN, SWEEP_ALPHA_MAX, SWEEP_POINTS)]


def cmd_sweep_alpha(cfg: RunConfig, alphas: list[float] | None = None) -> int:
    out = Path(cfg.out_dir)
    _echo_config(cfg, out)
    if alphas is None:
        alphas = default_alpha_grid()
    if not alphas:
        raise ValueError("alpha list is empty")
    for a in alphas:
        if a <= 0:
            raise ValueError(f"alpha must be positive, got {a}")
    deployment = _load_deployment(cfg, out)
    _, splits, _, windows = _prepare(cfg)
    all_windows = [windows[w] for w in splits.policy_test]
    evals = simulator.precompute_evaluations(deployment, all_windows)
    by_index = {ev.index: ev for ev in evals}
    train_evals = [by_index[w] for w in splits.policy_train]

    rows = []
    for alpha in alphas:
        env = simulator.build_bandit_env(
            deployment, [windows[w] for w in splits.policy_train], alpha, evals=train_evals
        )
        config = policy.PolicyTrainConfig(
            episodes=cfg.policy.episodes,
            epsilon0=cfg.policy.epsilon0,
            epsilon_zero_episode=cfg.policy.epsilon_zero_episode,
            gamma_l2=cfg.policy.gamma_l2,
            learning_rate=cfg.policy.learning_rate,
            greedy_learning_rate=cfg.policy.greedy_learning_rate,
            seed=cfg.policy.seed,
        )
        result = policy.train_policy(env, config)
        report = simulator.run_adaptive(
            deployment, result.params, all_windows, alpha, evals=evals
        )
        rows.append([f"{alpha:.6f}", f"{100.0 * report.accuracy:.4f}", f"{report.avg_delay_ms:.4f}"])
        print(f"alpha={alpha:.4f}: acc%={rows[-1][1]} delay_ms={rows[-1][2]}")
    _write_csv(out / "sweep" / "sweep.csv", ["alpha", "accuracy_pct", "avg_delay_ms"], rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hec-adapt",
        description="Adaptive anomaly detection over a 3-tier edge deployment",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="master seed override (detectors; policy gets seed+100)")
    parser.add_argument("--alpha", type=float, help="delay-cost alpha override")
    parser.add_argument("--out", help="output directory override")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", help="write the synthetic dataset as CSV + label file")
    sub.add_parser("train-detectors", help="train and persist the three detectors")
    sub.add_parser("train-policy", help="train and persist the tier-selection policy")
    sub.add_parser("evaluate", help="run all schemes and write comparison tables")
    sweep = sub.add_parser("sweep-alpha", help="retrain the policy per alpha and tabulate the tradeoff")
    sweep.add_argument("--alphas", help="comma-separated alpha values (default: 9-point grid)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args)
        if args.command == "gen-data":
            return cmd_gen_data(cfg)
        if args.command == "train-detectors":
            return cmd_train_detectors(cfg)
        if args.command == "train-policy":
            return cmd_train_policy(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "sweep-alpha":
            alphas = None
            if args.alphas:
                alphas = [float(a) for a in args.alphas.split(",")]
            return cmd_sweep_alpha(cfg, alphas)
        parser.error(f"unknown command {args.command}")
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
