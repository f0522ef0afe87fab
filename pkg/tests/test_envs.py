import numpy as np
import pytest
from scipy import ndimage

from cody.envs import REGISTRY, make_env
from cody.envs.pendulum import PendulumEnv
from cody.envs.point_mass import GOAL_A, GOAL_B, PointMassEnv


def centroid(frame: np.ndarray, channel: int = 0) -> tuple[float, float]:
    mask = frame[channel].astype(float)
    ys, xs = np.indices(mask.shape)
    total = mask.sum()
    return float((xs * mask).sum() / total), float((ys * mask).sum() / total)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_reset_deterministic(name):
    a = make_env(name, seed=5).reset()
    b = make_env(name, seed=5).reset()
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_default_observation_shape(name):
    obs = make_env(name).reset()
    assert obs.shape == (9, 84, 84)
    assert obs.dtype == np.uint8


def test_pendulum_draws_one_connected_object():
    env = PendulumEnv(seed=0)
    env.reset()
    for theta in np.linspace(-np.pi, np.pi, 13):
        env.set_state([theta, 0.0])
        mask = env.render().max(axis=0) > 0
        _, count = ndimage.label(mask)
        assert count == 1


def test_point_mass_zero_action_keeps_position():
    env = PointMassEnv(seed=1, goal=(0.3, 0.3))
    env.reset()
    env.set_state([0.1, -0.2, 0.0, 0.0, 0.3, 0.3])
    rewards = []
    for _ in range(5):
        _, r, _ = env.step(np.zeros(2))
        rewards.append(r)
    np.testing.assert_array_equal(env.state[:2], [0.1, -0.2])
    assert len(set(rewards)) == 1


def test_action_repeat_advances_simulator():
    env = PointMassEnv(action_repeat=4, seed=0)
    env.reset()
    env.step(np.zeros(2))
    assert env.sim_steps == 4
    assert env.step_count == 1


def test_constant_action_closed_form():
    env = PointMassEnv(action_repeat=1, seed=0)
    env.reset()
    a = np.array([0.3, -0.7])
    env.set_state([0.0, 0.0, 0.0, 0.0, 0.5, 0.5])
    n = 50
    for _ in range(n):
        env.step(a)
    dt, gain = PointMassEnv.dt, PointMassEnv.gain
    np.testing.assert_allclose(env.state[2:4], n * dt * gain * a, atol=1e-10)
    # semi-implicit Euler: p_n = dt^2 * gain * a * n (n + 1) / 2
    np.testing.assert_allclose(env.state[0:2], dt * dt * gain * a * n * (n + 1) / 2, atol=1e-10)


def test_render_is_pure():
    env = PointMassEnv(seed=0)
    env.reset()
    first = env.render()
    np.testing.assert_array_equal(first, env.render())


def test_mass_centroid_moves_right_with_x():
    env = PointMassEnv(seed=0, goal=(0.0, -0.8))
    env.reset()
    xs = []
    for x in np.linspace(-0.8, 0.8, 9):
        env.set_state([x, 0.5, 0.0, 0.0, 0.0, -0.8])
        xs.append(centroid(env.render(), channel=0)[0])
    assert np.all(np.diff(xs) > 0)


@pytest.mark.parametrize("pos", [(-5.0, 5.0), (0.9, 0.9), (-0.9, -0.9)])
def test_extreme_positions_stay_visible(pos):
    env = PointMassEnv(seed=0)
    env.reset()
    env.set_state([*pos, 0.0, 0.0, 0.0, 0.0])
    env.step(np.zeros(2))
    assert np.all(np.abs(env.state[:2]) <= PointMassEnv.bound)
    cx, cy = centroid(env.render(), channel=0)
    assert np.isfinite(cx) and np.isfinite(cy)


def test_wall_zeroes_inward_velocity():
    env = PointMassEnv(action_repeat=1, seed=0)
    env.reset()
    env.set_state([0.899, 0.0, 1.0, 0.0, 0.0, 0.0])
    env.step(np.zeros(2))
    assert env.state[0] == PointMassEnv.bound
    assert env.state[2] == 0.0


@pytest.mark.parametrize("cls", [PointMassEnv, PendulumEnv])
def test_markov_property(cls, rng):
    """Two different histories reaching the same state continue identically."""
    env_a, env_b = cls(seed=0), cls(seed=1)
    env_a.reset()
    env_b.reset()
    for _ in range(7):
        env_a.step(rng.uniform(-1, 1, cls.action_dim))
    env_b.set_state(env_a.state)
    action = rng.uniform(-1, 1, cls.action_dim)
    _, ra, _ = env_a.step(action)
    _, rb, _ = env_b.step(action)
    np.testing.assert_array_equal(env_a.state, env_b.state)
    assert ra == rb


@pytest.mark.parametrize("cls", [PointMassEnv, PendulumEnv])
def test_frame_stack_contract(cls, rng):
    env = cls(seed=3, image_size=32, frame_stack=3)
    env.reset()
    rendered = []
    for _ in range(5):
        obs, _, _ = env.step(rng.uniform(-1, 1, cls.action_dim))
        rendered.append(env.render())
    np.testing.assert_array_equal(obs, np.concatenate(rendered[-3:], axis=0))


def test_reset_repeats_first_frame():
    env = PointMassEnv(seed=0, image_size=32)
    obs = env.reset()
    np.testing.assert_array_equal(obs[0:3], obs[3:6])
    np.testing.assert_array_equal(obs[3:6], obs[6:9])


@pytest.mark.parametrize("cls", [PointMassEnv, PendulumEnv])
def test_reward_bounded_per_agent_step(cls, rng):
    env = cls(seed=0, image_size=16)
    env.reset()
    bound = env.action_repeat * cls.max_instant_reward
    for _ in range(50):
        _, r, _ = env.step(rng.uniform(-1, 1, cls.action_dim))
        assert 0.0 <= r <= bound


def test_nan_action_rejected():
    env = PointMassEnv(seed=0, image_size=16)
    env.reset()
    with pytest.raises(ValueError, match="NaN"):
        env.step(np.array([np.nan, 0.0]))
    with pytest.raises(ValueError):
        env.step(np.zeros(3))


def test_done_only_at_time_limit():
    env = PendulumEnv(seed=0, image_size=16, episode_budget=40, action_repeat=4)
    env.reset()
    dones = [env.step(np.zeros(1))[2] for _ in range(10)]
    assert dones == [False] * 9 + [True]


def test_goal_variants_share_observation_space():
    a = make_env("point_mass_goal_a", seed=0)
    b = make_env("point_mass_goal_b", seed=0)
    assert a.obs_shape == b.obs_shape
    a.reset()
    b.reset()
    np.testing.assert_array_equal(a.state[4:6], GOAL_A)
    np.testing.assert_array_equal(b.state[4:6], GOAL_B)


def test_unknown_env():
    with pytest.raises(ValueError, match="unknown"):
        make_env("cartpole")
