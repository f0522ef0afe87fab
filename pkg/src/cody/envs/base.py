"""Pixel control environment base: action repeat, frame stacking, time limit.

Subclasses only describe the underlying simulator: its initial-state
distribution, one deterministic dynamics step, the instantaneous reward and a
renderer. This is also the seam for plugging in other simulators.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    name: str
    action_dim: int
    action_repeat: int
    episode_length: int  # agent steps, after action repeat
    reward_range: tuple[float, float]  # per underlying step
    state_dim: int


class PixelEnv:
    """Markovian simulator observed through k stacked RGB frames.

    Only time-limit truncation ends an episode, so ``done`` never marks a
    true terminal state.
    """

    name = "base"
    action_dim = 1
    state_dim = 1
    default_action_repeat = 4
    max_instant_reward = 1.0

    def __init__(
        self,
        image_size: int = 84,
        frame_stack: int = 3,
        action_repeat: int | None = None,
        episode_budget: int = 1000,
        seed: int | None = None,
    ):
        if frame_stack < 1:
            raise ValueError("frame_stack must be >= 1")
        repeat = action_repeat or self.default_action_repeat
        if repeat < 1 or episode_budget < repeat:
            raise ValueError("need 1 <= action_repeat <= episode_budget")
        self.image_size = int(image_size)
        self.frame_stack = int(frame_stack)
        self.action_repeat = int(repeat)
        self.episode_budget = int(episode_budget)
        self.spec = EnvSpec(
            name=self.name,
            action_dim=self.action_dim,
            action_repeat=self.action_repeat,
            episode_length=self.episode_budget // self.action_repeat,
            reward_range=(0.0, self.max_instant_reward),
            state_dim=self.state_dim,
        )
        self.rng = np.random.default_rng(seed)
        self.state = np.zeros(self.state_dim)
        self.step_count = 0  # agent steps
        self.sim_steps = 0  # underlying steps
        self._frames: deque[np.ndarray] = deque(maxlen=self.frame_stack)

    # -- to be provided by subclasses ------------------------------------

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def dynamics(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        """One underlying step; must depend on (state, action) only."""
        raise NotImplementedError

    def reward(self, state: np.ndarray) -> float:
        raise NotImplementedError

    def draw(self, state: np.ndarray) -> np.ndarray:
        """(3, H, W) uint8 frame of ``state``."""
        raise NotImplementedError

    # -- public API ---------------------------------------------------------

    @property
    def obs_shape(self) -> tuple[int, int, int]:
        return (3 * self.frame_stack, self.image_size, self.image_size)

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        if rng is not None:
            self.rng = rng
        self.state = np.asarray(self.initial_state(self.rng), dtype=np.float64)
        self.step_count = 0
        self.sim_steps = 0
        frame = self.render()
        self._frames.clear()
        for _ in range(self.frame_stack):
            self._frames.append(frame)
        return self.observation()

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (self.action_dim,):
            raise ValueError(f"expected action of shape ({self.action_dim},), got {action.shape}")
        if not np.all(np.isfinite(action)):
            raise ValueError("action contains NaN or inf")
        action = np.clip(action, -1.0, 1.0)
        total = 0.0
        for _ in range(self.action_repeat):
            self.state = self.dynamics(self.state, action)
            total += self.reward(self.state)
            self.sim_steps += 1
        self.step_count += 1
        self._frames.append(self.render())
        done = self.step_count >= self.spec.episode_length
        return self.observation(), total, done

    def render(self) -> np.ndarray:
        return self.draw(self.state)

    def observation(self) -> np.ndarray:
        """Stacked frames, oldest first and newest last, along channels."""
        return np.concatenate(list(self._frames), axis=0)

    def set_state(self, state) -> None:
        self.state = np.asarray(state, dtype=np.float64).copy()
        frame = self.render()
        self._frames.clear()
        for _ in range(self.frame_stack):
            self._frames.append(frame)

    def physical_state(self) -> np.ndarray:
        """Low-dimensional state used for probing embeddings."""
        return self.state.copy()
