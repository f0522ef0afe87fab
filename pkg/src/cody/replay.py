"""Transitions and a bounded FIFO replay buffer with uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BufferNotWarmError(RuntimeError):
    """Raised when sampling more rows than the buffer currently holds."""


@dataclass
class Transition:
    """One environment interaction.

    ``state`` and ``next_state`` are uint8 stacked frames of shape
    (3k, H, W). ``done`` is the termination flag that masks the bootstrap;
    time-limit truncations are stored with ``done=False``.
    """

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class Batch:
    states: np.ndarray  # (B, 3k, H, W) uint8
    actions: np.ndarray  # (B, A) float32
    rewards: np.ndarray  # (B,) float32
    next_states: np.ndarray  # (B, 3k, H, W) uint8
    dones: np.ndarray  # (B,) float32

    def __len__(self) -> int:
        return self.states.shape[0]


class ReplayBuffer:
    """Ring buffer of transitions.

    Storage is preallocated with ``np.empty``; pages are only committed once
    written, so a large nominal capacity is cheap until it fills up.
    """

    def __init__(self, obs_shape: tuple[int, ...], action_dim: int, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.obs_shape = tuple(obs_shape)
        self.action_dim = int(action_dim)
        self.capacity = int(capacity)
        self._states = np.empty((capacity, *self.obs_shape), dtype=np.uint8)
        self._next_states = np.empty((capacity, *self.obs_shape), dtype=np.uint8)
        self._actions = np.empty((capacity, self.action_dim), dtype=np.float32)
        self._rewards = np.empty((capacity,), dtype=np.float32)
        self._dones = np.empty((capacity,), dtype=np.float32)
        self._cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        state = np.asarray(t.state)
        next_state = np.asarray(t.next_state)
        if state.shape != self.obs_shape or next_state.shape != self.obs_shape:
            raise ValueError(
                f"observation shape {state.shape}/{next_state.shape} does not match "
                f"buffer shape {self.obs_shape}"
            )
        if state.dtype != np.uint8 or next_state.dtype != np.uint8:
            raise ValueError("observations must be uint8 pixels")
        action = np.asarray(t.action, dtype=np.float32).reshape(-1)
        if action.shape != (self.action_dim,):
            raise ValueError(f"action shape {action.shape} != ({self.action_dim},)")
        if not np.all(np.isfinite(action)):
            raise ValueError("action contains non-finite values")

        i = self._cursor
        self._states[i] = state
        self._next_states[i] = next_state
        self._actions[i] = np.clip(action, -1.0, 1.0)
        self._rewards[i] = t.reward
        self._dones[i] = float(t.done)
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size < batch_size:
            raise BufferNotWarmError(
                f"buffer not warm: holds {self.size} transitions, batch needs {batch_size}"
            )
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Draw ``batch_size`` rows uniformly with replacement."""
        idx = self.sample_indices(batch_size, rng)
        return self.gather(idx)

    def gather(self, idx: np.ndarray) -> Batch:
        return Batch(
            states=self._states[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._next_states[idx],
            dones=self._dones[idx],
        )

    def get(self, i: int) -> Transition:
        """Transition stored in slot ``i`` (0 = oldest surviving entry)."""
        if not 0 <= i < self.size:
            raise IndexError(i)
        start = self._cursor if self.size == self.capacity else 0
        j = (start + i) % self.capacity
        return Transition(
            state=self._states[j].copy(),
            action=self._actions[j].copy(),
            reward=float(self._rewards[j]),
            next_state=self._next_states[j].copy(),
            done=bool(self._dones[j]),
        )

    # pickling only the filled part keeps checkpoints small
    def __getstate__(self) -> dict:
        state = self.__dict__.copy()
        n = self.size
        for key in ("_states", "_next_states", "_actions", "_rewards", "_dones"):
            state[key] = state[key][:n].copy()
        return state

    def __setstate__(self, state: dict) -> None:
        cap = state["capacity"]
        for key in ("_states", "_next_states", "_actions", "_rewards", "_dones"):
            filled = state[key]
            full = np.empty((cap, *filled.shape[1:]), dtype=filled.dtype)
            full[: len(filled)] = filled
            state[key] = full
        self.__dict__.update(state)
