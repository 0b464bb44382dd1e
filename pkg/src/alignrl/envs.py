"""Desk-scale episodic environments and an exact tabular planning oracle.

Three environments behind one interface:

- gridworld5: deterministic 5x5 grid, start (0,0), +1 on entering the goal
  cell (4,4), walls clamp, one-hot(25) observations, cap 100 steps.
- catch: 10x5 binary grid; the ball starts in row 0 at a random column and
  falls one row per step; the paddle (width 1, bottom row) moves
  left/stay/right. When the ball reaches the bottom row the episode ends
  with +1 on a catch and -1 otherwise; episodes last exactly 9 steps.
- chain5: five states in a line between two terminals, a single action,
  50/50 left/right moves, +1 only when exiting the right end, cap 200.

Hitting the step cap ends the episode as truncation, not termination, so
bootstrapped targets keep (1 - done) = 1 for capped transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class UnsupportedEnvError(ValueError):
    """Raised when a tabular-only operation meets a non-tabular environment."""


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    n_actions: int
    max_episode_steps: int
    gamma: float


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    terminal: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminal or self.truncated


class _EpisodicEnv:
    spec: EnvSpec

    def __init__(self):
        self._steps = 0
        self._finished = True

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._steps = 0
        self._finished = False
        return self._do_reset(rng)

    def step(self, action: int, rng: np.random.Generator) -> StepResult:
        if self._finished:
            raise RuntimeError("episode already finished; call reset() first")
        if not 0 <= action < self.spec.n_actions:
            raise ValueError(f"action {action} invalid for {self.spec.n_actions} actions")
        self._steps += 1
        obs, reward, terminal = self._do_step(action, rng)
        truncated = not terminal and self._steps >= self.spec.max_episode_steps
        self._finished = terminal or truncated
        return StepResult(obs, reward, terminal, truncated)

    def _do_reset(self, rng):
        raise NotImplementedError

    def _do_step(self, action, rng):
        raise NotImplementedError


class GridWorld5(_EpisodicEnv):
    SIZE = 5
    GOAL = (4, 4)
    # up, down, left, right
    MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))

    def __init__(self, gamma: float = 0.99):
        super().__init__()
        self.spec = EnvSpec("gridworld5", 25, 4, 100, gamma)
        self.row = 0
        self.col = 0

    def _obs(self) -> np.ndarray:
        obs = np.zeros(25)
        obs[self.row * 5 + self.col] = 1.0
        return obs

    def _do_reset(self, rng):
        self.row, self.col = 0, 0
        return self._obs()

    def _do_step(self, action, rng):
        dr, dc = self.MOVES[action]
        self.row = min(max(self.row + dr, 0), self.SIZE - 1)
        self.col = min(max(self.col + dc, 0), self.SIZE - 1)
        if (self.row, self.col) == self.GOAL:
            return self._obs(), 1.0, True
        return self._obs(), 0.0, False


class Catch(_EpisodicEnv):
    ROWS = 10
    COLS = 5

    def __init__(self, gamma: float = 0.99):
        super().__init__()
        self.spec = EnvSpec("catch", 50, 3, 9, gamma)
        self.ball_row = 0
        self.ball_col = 0
        self.paddle_col = 2

    def _obs(self) -> np.ndarray:
        obs = np.zeros(50)
        obs[self.ball_row * self.COLS + self.ball_col] = 1.0
        obs[(self.ROWS - 1) * self.COLS + self.paddle_col] = 1.0
        return obs

    def _do_reset(self, rng):
        self.ball_row = 0
        self.ball_col = int(rng.integers(0, self.COLS))
        self.paddle_col = self.COLS // 2
        return self._obs()

    def _do_step(self, action, rng):
        self.paddle_col = min(max(self.paddle_col + (action - 1), 0), self.COLS - 1)
        self.ball_row += 1
        if self.ball_row == self.ROWS - 1:
            reward = 1.0 if self.paddle_col == self.ball_col else -1.0
            return self._obs(), reward, True
        return self._obs(), 0.0, False


class Chain5(_EpisodicEnv):
    N = 5

    def __init__(self, gamma: float = 1.0):
        super().__init__()
        self.spec = EnvSpec("chain5", 5, 1, 200, gamma)
        self.pos = self.N // 2

    def _obs(self) -> np.ndarray:
        obs = np.zeros(self.N)
        obs[self.pos] = 1.0
        return obs

    def _do_reset(self, rng):
        self.pos = self.N // 2
        return self._obs()

    def _do_step(self, action, rng):
        move = 1 if rng.random() < 0.5 else -1
        nxt = self.pos + move
        if nxt < 0:
            return self._obs(), 0.0, True
        if nxt >= self.N:
            return self._obs(), 1.0, True
        self.pos = nxt
        return self._obs(), 0.0, False


ENV_NAMES = ("gridworld5", "catch", "chain5")


def make_env(name: str, gamma: float | None = None) -> _EpisodicEnv:
    if name == "gridworld5":
        return GridWorld5() if gamma is None else GridWorld5(gamma)
    if name == "catch":
        return Catch() if gamma is None else Catch(gamma)
    if name == "chain5":
        return Chain5() if gamma is None else Chain5(gamma)
    raise ValueError(f"unknown environment {name!r}; expected one of {ENV_NAMES}")


@dataclass
class TabularMDP:
    """Explicit finite MDP: transitions[s][a] lists (prob, next_state, reward, terminal)."""

    n_states: int
    n_actions: int
    transitions: list  # [s][a] -> list of (prob, next_state, reward, terminal)
    terminal_states: frozenset


def tabular_mdp(name: str) -> TabularMDP:
    """Exact dynamics for the tabular environments (gridworld5, chain5)."""
    if name == "gridworld5":
        goal = GridWorld5.GOAL[0] * 5 + GridWorld5.GOAL[1]
        transitions = []
        for s in range(25):
            row, col = divmod(s, 5)
            per_action = []
            for dr, dc in GridWorld5.MOVES:
                nr = min(max(row + dr, 0), 4)
                nc = min(max(col + dc, 0), 4)
                ns = nr * 5 + nc
                per_action.append([(1.0, ns, 1.0 if ns == goal else 0.0, ns == goal)])
            transitions.append(per_action)
        return TabularMDP(25, 4, transitions, frozenset({goal}))
    if name == "chain5":
        transitions = []
        for s in range(5):
            left = (0.5, max(s - 1, 0), 0.0, s == 0)
            right = (0.5, min(s + 1, 4), 1.0 if s == 4 else 0.0, s == 4)
            transitions.append([[left, right]])
        return TabularMDP(5, 1, transitions, frozenset())
    if name == "catch":
        raise UnsupportedEnvError("catch has no tabular dynamics export; use gridworld5 or chain5")
    raise ValueError(f"unknown environment {name!r}")


def bellman_backup(mdp: TabularMDP, q: np.ndarray, gamma: float) -> np.ndarray:
    """One synchronous optimal Bellman backup over the whole table."""
    values = q.max(axis=1)
    out = np.zeros_like(q)
    for s in range(mdp.n_states):
        if s in mdp.terminal_states:
            continue
        for a in range(mdp.n_actions):
            total = 0.0
            for prob, ns, reward, terminal in mdp.transitions[s][a]:
                total += prob * (reward + (0.0 if terminal else gamma * values[ns]))
            out[s, a] = total
    return out


def value_iteration(
    mdp: TabularMDP, gamma: float, tol: float, max_iterations: int = 1_000_000
) -> np.ndarray:
    """Q* to a sup-norm Bellman residual of at most tol."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    q = np.zeros((mdp.n_states, mdp.n_actions))
    for _ in range(max_iterations):
        nxt = bellman_backup(mdp, q, gamma)
        residual = np.max(np.abs(nxt - q))
        q = nxt
        if residual <= tol:
            return q
    raise RuntimeError(f"value iteration did not reach tol={tol} in {max_iterations} sweeps")


def greedy_policy(q: np.ndarray) -> np.ndarray:
    return q.argmax(axis=1)


def state_values(q: np.ndarray) -> np.ndarray:
    return q.max(axis=1)
