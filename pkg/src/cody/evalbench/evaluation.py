from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cody.envs import PixelEnv


@dataclass
class EvalRecord:
    env_step: int
    mean_return: float
    std_return: float
    episodes: int
    wallclock_ms_per_1k_env_steps: float = math.nan


def run_episode(policy, env: PixelEnv, rng: np.random.Generator) -> float:
    """Roll out one full episode and return its undiscounted return."""
    obs = env.reset(rng)
    total, done = 0.0, False
    while not done:
        obs, reward, done = env.step(policy(obs))
        total += reward
    return total


def evaluate(
    agent,
    env: PixelEnv,
    episodes: int,
    rng: np.random.Generator,
    env_step: int = 0,
    wallclock_ms_per_1k: float = math.nan,
) -> EvalRecord:
    """Average return of the deterministic (mean-action) policy.

    ``env`` must be a dedicated evaluation instance; the agent is only read.
    """
    policy = lambda obs: agent.act(obs, deterministic=True)  # noqa: E731
    returns = [run_episode(policy, env, rng) for _ in range(episodes)]
    return EvalRecord(
        env_step=env_step,
        mean_return=float(np.mean(returns)),
        std_return=float(np.std(returns)),
        episodes=len(returns),
        wallclock_ms_per_1k_env_steps=wallclock_ms_per_1k,
    )


def random_policy_baseline(env: PixelEnv, episodes: int, rng: np.random.Generator) -> EvalRecord:
    """Same protocol as :func:`evaluate` but with uniform random actions."""
    dim = env.action_dim
    policy = lambda obs: rng.uniform(-1.0, 1.0, size=dim)  # noqa: E731
    returns = [run_episode(policy, env, rng) for _ in range(episodes)]
    return EvalRecord(0, float(np.mean(returns)), float(np.std(returns)), len(returns))
