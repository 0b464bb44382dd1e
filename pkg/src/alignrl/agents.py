"""DQN-family agents with hard/soft target updates and alignment oversampling.

The train step follows the classic loop: sample a minibatch, build bootstrap
targets from the lagged target network, take one gradient step on the masked
MSE. With oversampling enabled it samples batch_size + oversample
transitions, scores each by target alignment, and keeps the top batch_size
for the update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .alignment import DEFAULT_EPSILON, ErrorPair, alignment_values, top_k_indices
from .nn import NetworkParams, OptimizerConfig, OptimizerState
from .replay import ReplayBuffer, Transition

VARIANTS = ("dqn", "ddqn")


@dataclass
class EpsilonSchedule:
    start: float = 1.0
    final: float = 0.01
    fraction: float = 0.05

    def validate(self) -> None:
        if not 0.0 <= self.final <= self.start <= 1.0:
            raise ValueError("epsilon schedule needs 0 <= final <= start <= 1")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"epsilon.fraction: must lie in (0, 1], got {self.fraction}")


@dataclass
class TargetUpdateConfig:
    kind: str = "hard"  # "hard" or "soft"
    interval: int = 1000  # steps between hard overwrites
    tau: float = 0.01  # soft-update mixing coefficient

    def validate(self) -> None:
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"target_update.kind: expected 'hard' or 'soft', got {self.kind!r}")
        if self.kind == "hard" and self.interval < 1:
            raise ValueError(f"target_update.interval: must be >= 1, got {self.interval}")
        if self.kind == "soft" and not 0.0 < self.tau <= 1.0:
            raise ValueError(f"target_update.tau: must lie in (0, 1], got {self.tau}")


@dataclass
class AgentConfig:
    variant: str = "dqn"
    tarl_enabled: bool = False
    batch_size: int = 32
    oversample: int = 32
    target_update: TargetUpdateConfig = field(default_factory=TargetUpdateConfig)
    gamma: float = 0.99
    learning_starts: int = 1000
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    hidden_sizes: tuple[int, ...] = (64, 64)
    buffer_capacity: int = 10_000
    # Compute pool/selected alignment for the step report even when
    # oversampling is off. Diagnostics never change the parameter trajectory.
    align_diagnostics: bool = True

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"agent.variant: expected one of {VARIANTS}, got {self.variant!r}")
        if self.batch_size < 1:
            raise ValueError(f"agent.batch_size: must be >= 1, got {self.batch_size}")
        if self.oversample < 0:
            raise ValueError(f"agent.oversample: must be >= 0, got {self.oversample}")
        if self.tarl_enabled and self.oversample < 1:
            raise ValueError("agent.oversample: must be >= 1 when tarl_enabled")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"agent.gamma: must lie in (0, 1], got {self.gamma}")
        if self.learning_starts < 0:
            raise ValueError(f"agent.learning_starts: must be >= 0, got {self.learning_starts}")
        if self.buffer_capacity < 1:
            raise ValueError(f"agent.buffer_capacity: must be >= 1, got {self.buffer_capacity}")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValueError(f"agent.hidden_sizes: must be positive, got {self.hidden_sizes}")
        self.target_update.validate()
        self.epsilon.validate()
        self.optimizer.validate()


@dataclass
class AgentState:
    online: NetworkParams
    target: NetworkParams
    opt: OptimizerState
    step_count: int = 0  # environment steps seen (train_step calls)
    train_steps: int = 0  # gradient updates performed


@dataclass
class StepReport:
    loss: float | None = None
    mean_pool_alignment: float | None = None
    mean_selected_alignment: float | None = None
    selected_indices: np.ndarray | None = None
    updated: bool = False
    hard_update_performed: bool = False


def init_agent(config: AgentConfig, obs_dim: int, n_actions: int, rng: np.random.Generator) -> AgentState:
    config.validate()
    sizes = (obs_dim, *config.hidden_sizes, n_actions)
    online = nn.he_uniform_init(sizes, rng)
    return AgentState(online=online, target=online.copy(), opt=nn.init_optimizer(config.optimizer, online))


def epsilon_at(step: int, schedule: EpsilonSchedule, total_steps: int) -> float:
    """Linear decay from start to final over fraction * total_steps, constant after."""
    decay_steps = schedule.fraction * total_steps
    if step >= decay_steps:
        return schedule.final
    return schedule.start + (schedule.final - schedule.start) * (step / decay_steps)


def act(state: AgentState, obs: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy action; greedy ties go to the smallest action index."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, state.online.out_dim))
    return int(np.argmax(nn.forward_single(state.online, obs)))


def targets_dqn(
    state: AgentState,
    rewards: np.ndarray,
    next_states: np.ndarray,
    dones: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """y = r + (1 - done) * gamma * max_a Q(s', a; target)."""
    boot = nn.forward(state.target, next_states).max(axis=1)
    return rewards + gamma * (1.0 - dones) * boot


def targets_ddqn(
    state: AgentState,
    rewards: np.ndarray,
    next_states: np.ndarray,
    dones: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Action argmax from the online network, value from the target network."""
    best = np.argmax(nn.forward(state.online, next_states), axis=1)
    boot = nn.forward(state.target, next_states)[np.arange(len(best)), best]
    return rewards + gamma * (1.0 - dones) * boot


def td_error_pairs(
    state: AgentState,
    states: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    next_states: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    variant: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-transition (online error, offline error, offline target), batched.

    The online error bootstraps from the online network, the offline error
    from the target network; under ddqn each error uses the decoupled
    argmax/value rule with its own parameter set, which for the online error
    (online net in both roles) collapses to the ordinary max.
    """
    n = states.shape[0]
    rows = np.arange(n)
    # One fused pass of the online net over current and next observations.
    q_both = nn._forward_raw(state.online, np.concatenate([states, next_states]))
    q_sa = q_both[rows, actions]
    q_next_online = q_both[n:]
    q_next_target = nn._forward_raw(state.target, next_states)
    online_boot = q_next_online.max(axis=1)
    if variant == "ddqn":
        offline_boot = q_next_target[rows, np.argmax(q_next_online, axis=1)]
    else:
        offline_boot = q_next_target.max(axis=1)
    mask = gamma * (1.0 - dones)
    y_online = rewards + mask * online_boot
    y_offline = rewards + mask * offline_boot
    return y_online - q_sa, y_offline - q_sa, y_offline


def td_error_pair(
    state: AgentState, transition: Transition, gamma: float, variant: str = "dqn"
) -> ErrorPair:
    """Scalar error pair for one transition (taken action only)."""
    delta, delta_bar, _ = td_error_pairs(
        state,
        transition.state[None, :],
        np.array([transition.action]),
        np.array([transition.reward]),
        transition.next_state[None, :],
        np.array([1.0 if transition.done else 0.0]),
        gamma,
        variant,
    )
    return ErrorPair(float(delta[0]), float(delta_bar[0]))


def hard_update(state: AgentState) -> None:
    """Overwrite the target network with a deep copy of the online one."""
    state.target = state.online.copy()


def soft_update(state: AgentState, tau: float) -> None:
    """Polyak update: target <- tau * online + (1 - tau) * target."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    mixed = tau * state.online.flat + (1.0 - tau) * state.target.flat
    state.target = NetworkParams(state.target.sizes, mixed)


def train_step(
    state: AgentState,
    buffer: ReplayBuffer,
    config: AgentConfig,
    rng: np.random.Generator,
    score_eps: float = DEFAULT_EPSILON,
) -> StepReport:
    """One loop iteration: sample, (score, select,) update, sync target.

    Counts the call as one environment step. Skips the gradient update (no-op
    report) until learning_starts steps have been seen and the buffer can
    serve the full sample; the target-network schedule runs regardless.
    """
    state.step_count += 1
    report = StepReport()

    pool_n = config.batch_size + (config.oversample if config.tarl_enabled else 0)
    if state.step_count >= config.learning_starts and len(buffer) >= pool_n:
        idx = buffer.sample_indices(pool_n, rng)
        states, actions, rewards, next_states, dones = buffer.gather(idx)

        if config.tarl_enabled or config.align_diagnostics:
            delta, delta_bar, y_offline = td_error_pairs(
                state, states, actions, rewards, next_states, dones,
                config.gamma, config.variant,
            )
            values = alignment_values(delta, delta_bar, score_eps)
            if config.tarl_enabled:
                keep = top_k_indices(values, config.batch_size)
            else:
                keep = np.arange(config.batch_size)
            mean_pool = float(values.mean())
            mean_selected = float(values[keep].mean())
            if mean_selected < mean_pool - 1e-12:
                raise AssertionError(
                    f"selected alignment {mean_selected} fell below pool mean {mean_pool}"
                )
            report.mean_pool_alignment = mean_pool
            report.mean_selected_alignment = mean_selected
        else:
            keep = np.arange(config.batch_size)
            if config.variant == "ddqn":
                y_offline = targets_ddqn(state, rewards, next_states, dones, config.gamma)
            else:
                y_offline = targets_dqn(state, rewards, next_states, dones, config.gamma)

        loss, grads = nn.backward_mse(
            state.online, states[keep], actions[keep], y_offline[keep]
        )
        state.online, state.opt = nn.apply_update(state.online, grads, state.opt)
        state.train_steps += 1
        report.loss = loss
        report.selected_indices = idx[keep]
        report.updated = True

    if config.target_update.kind == "soft":
        soft_update(state, config.target_update.tau)
    elif state.step_count % config.target_update.interval == 0:
        hard_update(state)
        report.hard_update_performed = True
    return report
