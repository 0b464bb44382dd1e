"""Fixed-capacity ring-buffer experience replay with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """FIFO ring buffer over transitions, stored column-wise for fast batching.

    Once full, each push overwrites the oldest entry. Sampling is uniform
    with replacement over the current contents; returned indices are storage
    slots, valid until the slot is overwritten.
    """

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self.states = np.zeros((capacity, obs_dim), dtype=np.float64)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, obs_dim), dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=np.float64)
        self.write_cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        state = np.asarray(t.state, dtype=np.float64)
        next_state = np.asarray(t.next_state, dtype=np.float64)
        if state.shape != (self.obs_dim,) or next_state.shape != (self.obs_dim,):
            raise ValueError(
                f"transition observation dims {state.shape}/{next_state.shape} "
                f"do not match buffer obs_dim {self.obs_dim}"
            )
        i = self.write_cursor
        self.states[i] = state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = next_state
        self.dones[i] = 1.0 if t.done else 0.0
        self.write_cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __getitem__(self, index: int) -> Transition:
        if not 0 <= index < self.size:
            raise IndexError(f"slot {index} out of range for buffer of size {self.size}")
        return Transition(
            state=self.states[index].copy(),
            action=int(self.actions[index]),
            reward=float(self.rewards[index]),
            next_state=self.next_states[index].copy(),
            done=bool(self.dones[index]),
        )

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n uniform-with-replacement slot indices over current contents.

        Replacement makes n independent of the fill level, so only an empty
        buffer cannot serve a sample; batch-size gating against the fill level
        is the caller's job (learning_starts).
        """
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self.size, size=n)

    def gather(self, indices: np.ndarray):
        """Batch arrays (states, actions, rewards, next_states, dones) for slots."""
        return (
            self.states[indices],
            self.actions[indices],
            self.rewards[indices],
            self.next_states[indices],
            self.dones[indices],
        )

    def sample_uniform(
        self, n: int, rng: np.random.Generator
    ) -> list[tuple[int, Transition]]:
        """Uniform sample with replacement, as (slot index, transition) pairs."""
        return [(int(i), self[int(i)]) for i in self.sample_indices(n, rng)]
