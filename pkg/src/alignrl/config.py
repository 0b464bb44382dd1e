"""Run configuration: JSON schema, defaults, validation, round-tripping.

One JSON document fully determines a run. Defaults follow common DQN
practice scaled to desk-size environments: adam at 2.5e-4, batch 32,
gamma 0.99, epsilon 1.0 -> 0.01 over the first 5% of steps, replay
capacity 10^4, learning starts at 1,000 steps, hard target updates every
1,000 steps, and an oversampling pool equal to the batch size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .agents import AgentConfig, EpsilonSchedule, TargetUpdateConfig
from .envs import ENV_NAMES
from .nn import OptimizerConfig


class ConfigError(ValueError):
    """Configuration problem; the message names the offending field."""


@dataclass
class RunConfig:
    env: str
    seeds: list[int]
    agent: AgentConfig = field(default_factory=AgentConfig)
    total_steps: int = 50_000
    eval_points: int = 100
    eval_episodes: int = 5
    output_dir: str = "runs"

    def validate(self) -> None:
        if self.env not in ENV_NAMES:
            raise ConfigError(f"env: expected one of {ENV_NAMES}, got {self.env!r}")
        if not self.seeds:
            raise ConfigError("seeds: at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds: duplicates are not allowed")
        if self.total_steps < 1:
            raise ConfigError(f"total_steps: must be >= 1, got {self.total_steps}")
        if not 1 <= self.eval_points <= self.total_steps:
            raise ConfigError(
                f"eval_points: must lie in [1, total_steps], got {self.eval_points}"
            )
        if self.eval_episodes < 1:
            raise ConfigError(f"eval_episodes: must be >= 1, got {self.eval_episodes}")
        try:
            self.agent.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _take(doc: dict, known: dict, where: str) -> None:
    unknown = set(doc) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")


def _parse_agent(doc: dict) -> AgentConfig:
    agent = AgentConfig()
    fields = {
        "variant": str,
        "tarl_enabled": bool,
        "batch_size": int,
        "oversample": int,
        "target_update": dict,
        "gamma": float,
        "learning_starts": int,
        "epsilon": dict,
        "optimizer": dict,
        "hidden_sizes": list,
        "buffer_capacity": int,
        "align_diagnostics": bool,
    }
    _take(doc, fields, "agent")
    for key, value in doc.items():
        if key == "target_update":
            tu = TargetUpdateConfig()
            _take(value, {"kind": str, "interval": int, "tau": float}, "agent.target_update")
            tu.kind = value.get("kind", tu.kind)
            tu.interval = int(value.get("interval", tu.interval))
            tu.tau = float(value.get("tau", tu.tau))
            agent.target_update = tu
        elif key == "epsilon":
            eps = EpsilonSchedule()
            _take(value, {"start": float, "final": float, "fraction": float}, "agent.epsilon")
            eps.start = float(value.get("start", eps.start))
            eps.final = float(value.get("final", eps.final))
            eps.fraction = float(value.get("fraction", eps.fraction))
            agent.epsilon = eps
        elif key == "optimizer":
            opt = OptimizerConfig()
            known = {"kind": str, "learning_rate": float, "beta1": float, "beta2": float, "eps": float}
            _take(value, known, "agent.optimizer")
            opt.kind = value.get("kind", opt.kind)
            opt.learning_rate = float(value.get("learning_rate", opt.learning_rate))
            opt.beta1 = float(value.get("beta1", opt.beta1))
            opt.beta2 = float(value.get("beta2", opt.beta2))
            opt.eps = float(value.get("eps", opt.eps))
            agent.optimizer = opt
        elif key == "hidden_sizes":
            agent.hidden_sizes = tuple(int(h) for h in value)
        else:
            setattr(agent, key, fields[key](value))
    return agent


def parse_run_config(doc: dict) -> RunConfig:
    """Build a validated RunConfig from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    known = {
        "env": str,
        "seeds": list,
        "agent": dict,
        "total_steps": int,
        "eval_points": int,
        "eval_episodes": int,
        "output_dir": str,
    }
    _take(doc, known, "config")
    if "env" not in doc or not doc["env"]:
        raise ConfigError("env: field is required")
    if "seeds" not in doc or not doc["seeds"]:
        raise ConfigError("seeds: field is required and must be nonempty")
    config = RunConfig(env=str(doc["env"]), seeds=[int(s) for s in doc["seeds"]])
    if "agent" in doc:
        config.agent = _parse_agent(doc["agent"])
    for key in ("total_steps", "eval_points", "eval_episodes"):
        if key in doc:
            setattr(config, key, int(doc[key]))
    if "output_dir" in doc:
        config.output_dir = str(doc["output_dir"])
    config.validate()
    return config


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_run_config(doc)


def run_config_to_dict(config: RunConfig) -> dict:
    agent = config.agent
    return {
        "env": config.env,
        "seeds": list(config.seeds),
        "total_steps": config.total_steps,
        "eval_points": config.eval_points,
        "eval_episodes": config.eval_episodes,
        "output_dir": config.output_dir,
        "agent": {
            "variant": agent.variant,
            "tarl_enabled": agent.tarl_enabled,
            "batch_size": agent.batch_size,
            "oversample": agent.oversample,
            "target_update": {
                "kind": agent.target_update.kind,
                "interval": agent.target_update.interval,
                "tau": agent.target_update.tau,
            },
            "gamma": agent.gamma,
            "learning_starts": agent.learning_starts,
            "epsilon": {
                "start": agent.epsilon.start,
                "final": agent.epsilon.final,
                "fraction": agent.epsilon.fraction,
            },
            "optimizer": {
                "kind": agent.optimizer.kind,
                "learning_rate": agent.optimizer.learning_rate,
                "beta1": agent.optimizer.beta1,
                "beta2": agent.optimizer.beta2,
                "eps": agent.optimizer.eps,
            },
            "hidden_sizes": list(agent.hidden_sizes),
            "buffer_capacity": agent.buffer_capacity,
            "align_diagnostics": agent.align_diagnostics,
        },
    }


def save_run_config(config: RunConfig, path) -> None:
    Path(path).write_text(
        json.dumps(run_config_to_dict(config), indent=2) + "\n", encoding="utf-8"
    )
