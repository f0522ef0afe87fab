"""Torque-limited pendulum swing-up."""

from __future__ import annotations

import numpy as np

from cody.envs import render
from cody.envs.base import PixelEnv

ROD_COLOR = (230, 230, 230)


class PendulumEnv(PixelEnv):
    """State is (theta, omega) with theta = 0 upright.

    The maximal torque acceleration is below gravity's, so the pendulum has
    to be swung up. Reward per underlying step is ``(1 + cos theta) / 2``.
    """

    name = "pendulum"
    action_dim = 1
    state_dim = 2
    default_action_repeat = 4

    dt = 0.02
    gravity = 10.0  # g / l
    torque = 4.0  # max angular acceleration from the actuator
    damping = 0.05
    max_speed = 8.0
    length = 0.8
    width = 0.12

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        theta = np.pi + rng.uniform(-0.2, 0.2)
        return np.array([_wrap(theta), 0.0])

    def dynamics(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        theta, omega = state
        acc = self.gravity * np.sin(theta) - self.damping * omega + self.torque * action[0]
        omega = float(np.clip(omega + self.dt * acc, -self.max_speed, self.max_speed))
        theta = _wrap(theta + self.dt * omega)
        return np.array([theta, omega])

    def reward(self, state: np.ndarray) -> float:
        return 0.5 * (1.0 + float(np.cos(state[0])))

    def draw(self, state: np.ndarray) -> np.ndarray:
        canvas = render.blank(self.image_size)
        tip = (self.length * np.sin(state[0]), self.length * np.cos(state[0]))
        render.draw_rod(canvas, (0.0, 0.0), tip, self.width, ROD_COLOR)
        return render.to_uint8(canvas)

    def physical_state(self) -> np.ndarray:
        theta, omega = self.state
        return np.array([np.cos(theta), np.sin(theta), omega])


def _wrap(theta: float) -> float:
    return float((theta + np.pi) % (2 * np.pi) - np.pi)
