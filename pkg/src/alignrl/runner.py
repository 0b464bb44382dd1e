"""Seeded experiment runner: training loop, evaluation protocol, metrics IO.

Each run derives independent RNG streams (network init, environment,
exploration, replay sampling, evaluation) from its master seed, so
evaluation never perturbs training and repeated runs are byte-identical.
Evaluations happen at evenly spaced steps: the greedy policy plays
eval_episodes full episodes on a separate environment instance, and the
eval score is the mean undiscounted episode return.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import agents, nn
from .config import RunConfig, save_run_config
from .envs import make_env
from .replay import ReplayBuffer, Transition

METRICS_FIELDS = (
    "seed",
    "step",
    "episode_return",
    "eval_score",
    "loss",
    "mean_pool_alignment",
    "mean_selected_alignment",
    "epsilon",
)

METRICS_HEADER = ",".join(METRICS_FIELDS)


@dataclass
class MetricsRow:
    seed: int
    step: int
    episode_return: float | None
    eval_score: float | None
    loss: float | None
    mean_pool_alignment: float | None
    mean_selected_alignment: float | None
    epsilon: float


@dataclass
class RunResult:
    seed: int
    metrics_path: Path
    checkpoint_path: Path
    eval_steps: list[int]
    eval_scores: list[float]

    @property
    def final_eval_score(self) -> float:
        return self.eval_scores[-1]


def eval_step_grid(total_steps: int, eval_points: int) -> list[int]:
    """Evenly spaced evaluation steps, ending exactly at total_steps."""
    return [(i * total_steps) // eval_points for i in range(1, eval_points + 1)]


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _params_digest(params: nn.NetworkParams) -> bytes:
    return hashlib.blake2b(params.flat.tobytes(), digest_size=16).digest()


def evaluate(
    state: agents.AgentState, env, episodes: int, rng: np.random.Generator
) -> float:
    """Mean undiscounted return of the greedy policy over full episodes."""
    total = 0.0
    for _ in range(episodes):
        obs = env.reset(rng)
        while True:
            action = agents.act(state, obs, 0.0, rng)
            obs, reward, terminal, truncated = env.step(action, rng)
            total += reward
            if terminal or truncated:
                break
    return total / episodes


def run_seed(config: RunConfig, seed: int, out_dir: Path) -> RunResult:
    """Train one seed to completion, streaming metrics rows to CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    agent_cfg = config.agent

    init_ss, env_ss, explore_ss, replay_ss, eval_ss = np.random.SeedSequence(seed).spawn(5)
    env_rng = np.random.default_rng(env_ss)
    explore_rng = np.random.default_rng(explore_ss)
    replay_rng = np.random.default_rng(replay_ss)
    eval_rng = np.random.default_rng(eval_ss)

    env = make_env(config.env)
    eval_env = make_env(config.env)
    state = agents.init_agent(
        agent_cfg, env.spec.obs_dim, env.spec.n_actions, np.random.default_rng(init_ss)
    )
    buffer = ReplayBuffer(agent_cfg.buffer_capacity, env.spec.obs_dim)

    eval_grid = set(eval_step_grid(config.total_steps, config.eval_points))
    eval_steps: list[int] = []
    eval_scores: list[float] = []

    metrics_path = out_dir / f"metrics_seed{seed}.csv"
    checkpoint_path = out_dir / f"checkpoint_seed{seed}.json"
    schedule = agent_cfg.epsilon
    total_steps = config.total_steps

    with open(metrics_path, "w", encoding="utf-8") as fh:
        fh.write(METRICS_HEADER + "\n")
        obs = env.reset(env_rng)
        episode_return = 0.0
        for t in range(1, total_steps + 1):
            eps = agents.epsilon_at(t - 1, schedule, total_steps)
            action = agents.act(state, obs, eps, explore_rng)
            next_obs, reward, terminal, truncated = env.step(action, env_rng)
            buffer.push(Transition(obs, action, reward, next_obs, terminal))
            episode_return += reward

            report = agents.train_step(state, buffer, agent_cfg, replay_rng)

            finished_return = None
            if terminal or truncated:
                finished_return = episode_return
                episode_return = 0.0
                obs = env.reset(env_rng)
            else:
                obs = next_obs

            eval_score = None
            if t in eval_grid:
                before = (len(buffer), _params_digest(state.online))
                eval_score = evaluate(state, eval_env, config.eval_episodes, eval_rng)
                after = (len(buffer), _params_digest(state.online))
                if before != after:
                    raise AssertionError("evaluation must not touch the buffer or parameters")
                eval_steps.append(t)
                eval_scores.append(eval_score)

            fh.write(
                f"{seed},{t},{_fmt(finished_return)},{_fmt(eval_score)},"
                f"{_fmt(report.loss)},{_fmt(report.mean_pool_alignment)},"
                f"{_fmt(report.mean_selected_alignment)},{_fmt(eps)}\n"
            )
            if eval_score is not None:
                fh.flush()

    nn.save_params(state.online, checkpoint_path)
    return RunResult(seed, metrics_path, checkpoint_path, eval_steps, eval_scores)


def run_training(
    config: RunConfig, output_dir=None, workers: int = 1
) -> list[RunResult]:
    """Execute every seed of a run; returns the per-seed results.

    Seeds are independent; with workers > 1 they execute in separate
    processes, one run per worker.
    """
    config.validate()
    out_dir = Path(output_dir if output_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_run_config(config, out_dir / "config.json")
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_seed, config, s, out_dir) for s in config.seeds]
            return [f.result() for f in futures]
    return [run_seed(config, seed, out_dir) for seed in config.seeds]


def read_metrics(path) -> list[MetricsRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header in {path}: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(
                MetricsRow(
                    seed=int(parts[0]),
                    step=int(parts[1]),
                    episode_return=float(parts[2]) if parts[2] else None,
                    eval_score=float(parts[3]) if parts[3] else None,
                    loss=float(parts[4]) if parts[4] else None,
                    mean_pool_alignment=float(parts[5]) if parts[5] else None,
                    mean_selected_alignment=float(parts[6]) if parts[6] else None,
                    epsilon=float(parts[7]),
                )
            )
    return rows


def eval_curve(path) -> tuple[np.ndarray, np.ndarray]:
    """(steps, eval scores) extracted from one metrics CSV."""
    steps, scores = [], []
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if parts[3]:
                steps.append(int(parts[1]))
                scores.append(float(parts[3]))
    return np.asarray(steps), np.asarray(scores)


def moving_average(x: np.ndarray, window: int = 10) -> np.ndarray:
    """Trailing moving average; early entries average what is available."""
    x = np.asarray(x, dtype=np.float64)
    if window <= 1 or x.size == 0:
        return x.copy()
    csum = np.concatenate([[0.0], np.cumsum(x)])
    n = x.size
    starts = np.maximum(np.arange(n) - window + 1, 0)
    return (csum[np.arange(n) + 1] - csum[starts]) / (np.arange(n) + 1 - starts)


def area_under_curve(scores: np.ndarray) -> float:
    """Mean eval score over the run's evenly spaced evaluation grid."""
    return float(np.mean(scores))


@dataclass
class ArmSummary:
    directory: str
    steps: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray

    @property
    def median_final(self) -> float:
        return float(self.median[-1])

    @property
    def iqr_final(self) -> float:
        return float(self.q75[-1] - self.q25[-1])


@dataclass
class ComparisonReport:
    arm_a: ArmSummary
    arm_b: ArmSummary


def _load_arm(directory, smoothing_window: int) -> ArmSummary:
    directory = Path(directory)
    paths = sorted(directory.glob("metrics_seed*.csv"))
    if not paths:
        raise ValueError(f"no metrics_seed*.csv files in {directory}")
    curves = [eval_curve(p) for p in paths]
    base_steps = curves[0][0]
    smoothed = []
    for steps, scores in curves:
        if not np.array_equal(steps, base_steps):
            warnings.warn(
                f"eval grids differ within {directory}; aligning by nearest step",
                stacklevel=3,
            )
            scores = _nearest_align(base_steps, steps, scores)
        smoothed.append(moving_average(scores, smoothing_window))
    stack = np.vstack(smoothed)
    return ArmSummary(
        directory=str(directory),
        steps=base_steps,
        median=np.median(stack, axis=0),
        q25=np.percentile(stack, 25, axis=0),
        q75=np.percentile(stack, 75, axis=0),
    )


def _nearest_align(target_steps, steps, scores) -> np.ndarray:
    idx = np.abs(steps[None, :] - target_steps[:, None]).argmin(axis=1)
    return scores[idx]


def compare_runs(dir_a, dir_b, smoothing_window: int = 10) -> ComparisonReport:
    """Median/IQR learning curves for two result directories.

    Per-seed eval curves are smoothed with a trailing moving average (the
    standard 10-point window) before the across-seed statistics. Mismatched
    eval grids are aligned to arm A's grid by nearest step, with a warning.
    """
    arm_a = _load_arm(dir_a, smoothing_window)
    arm_b = _load_arm(dir_b, smoothing_window)
    if not np.array_equal(arm_a.steps, arm_b.steps):
        warnings.warn("eval grids differ between arms; aligning by nearest step", stacklevel=2)
        for name in ("median", "q25", "q75"):
            setattr(arm_b, name, _nearest_align(arm_a.steps, arm_b.steps, getattr(arm_b, name)))
        arm_b.steps = arm_a.steps
    return ComparisonReport(arm_a, arm_b)


def write_comparison(report: ComparisonReport, out_dir) -> None:
    """curves.csv with per-step medians/IQRs and summary.json with the finals."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    a, b = report.arm_a, report.arm_b
    with open(out_dir / "curves.csv", "w", encoding="utf-8") as fh:
        fh.write("step,a_median,a_q25,a_q75,b_median,b_q25,b_q75\n")
        for i, step in enumerate(a.steps):
            fh.write(
                f"{int(step)},{_fmt(a.median[i])},{_fmt(a.q25[i])},{_fmt(a.q75[i])},"
                f"{_fmt(b.median[i])},{_fmt(b.q25[i])},{_fmt(b.q75[i])}\n"
            )
    summary = {
        "arm_a": {"dir": a.directory, "median_final": a.median_final, "iqr_final": a.iqr_final},
        "arm_b": {"dir": b.directory, "median_final": b.median_final, "iqr_final": b.iqr_final},
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
