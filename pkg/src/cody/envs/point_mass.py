"""2-D double integrator that has to reach a goal disc."""

from __future__ import annotations

import numpy as np

from cody.envs import render
from cody.envs.base import PixelEnv

MASS_COLOR = (255, 96, 0)
GOAL_COLOR = (0, 200, 90)


class PointMassEnv(PixelEnv):
    """State is (x, y, vx, vy, goal_x, goal_y); actions are accelerations.

    Semi-implicit Euler without friction: ``v += dt * gain * a`` then
    ``p += dt * v``. Positions are clamped to the arena and the velocity
    component pointing into a wall is zeroed. Reward per underlying step is
    ``1 - tanh(reward_scale * distance_to_goal)``.
    """

    name = "point_mass"
    action_dim = 2
    state_dim = 6
    default_action_repeat = 4

    dt = 0.01
    gain = 2.0
    bound = 0.9
    reward_scale = 2.0
    mass_radius = 0.1
    goal_radius = 0.1

    def __init__(self, goal: tuple[float, float] | None = None, **kwargs):
        self.fixed_goal = None if goal is None else np.asarray(goal, dtype=np.float64)
        super().__init__(**kwargs)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        pos = rng.uniform(-0.8, 0.8, size=2)
        if self.fixed_goal is None:
            goal = rng.uniform(-0.7, 0.7, size=2)
        else:
            goal = self.fixed_goal
        return np.concatenate([pos, np.zeros(2), goal])

    def dynamics(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        pos, vel, goal = state[0:2], state[2:4], state[4:6]
        vel = vel + self.dt * self.gain * action
        pos = pos + self.dt * vel
        hit = np.abs(pos) > self.bound
        pos = np.clip(pos, -self.bound, self.bound)
        vel = np.where(hit, 0.0, vel)
        return np.concatenate([pos, vel, goal])

    def reward(self, state: np.ndarray) -> float:
        dist = float(np.linalg.norm(state[0:2] - state[4:6]))
        return 1.0 - float(np.tanh(self.reward_scale * dist))

    def draw(self, state: np.ndarray) -> np.ndarray:
        canvas = render.blank(self.image_size)
        render.draw_disc(canvas, state[4:6], self.goal_radius, GOAL_COLOR)
        render.draw_disc(canvas, state[0:2], self.mass_radius, MASS_COLOR)
        return render.to_uint8(canvas)


GOAL_A = (-0.5, 0.5)
GOAL_B = (0.5, -0.5)


class PointMassGoalA(PointMassEnv):
    name = "point_mass_goal_a"

    def __init__(self, **kwargs):
        super().__init__(goal=GOAL_A, **kwargs)


class PointMassGoalB(PointMassEnv):
    name = "point_mass_goal_b"

    def __init__(self, **kwargs):
        super().__init__(goal=GOAL_B, **kwargs)
