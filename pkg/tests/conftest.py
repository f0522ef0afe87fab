import os

import numpy as np
import pytest
import torch

from cody.config import TrainConfig

torch.set_num_threads(1)

DESK_SCALE = os.environ.get("CODY_DESK_SCALE") == "1"


def tiny_config(**overrides) -> TrainConfig:
    """Shrunken networks and images so a gradient step takes milliseconds."""
    base = dict(
        env_name="point_mass",
        seed=0,
        image_size=16,
        frame_stack=3,
        batch_size=8,
        init_steps=16,
        total_env_steps=40,
        episode_budget=80,
        replay_capacity=500,
        hidden_dim=32,
        transition_hidden_dim=32,
        action_hidden_dim=16,
        feature_dim=12,
        action_embed_dim=4,
        num_filters=8,
        max_shift=2,
        eval_interval=1000,
        eval_episodes=1,
        save_checkpoints=False,
    )
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary -------------------------------------------------------

_acceptance: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion number n")


def pytest_runtest_logreport(report):
    marker = report.__dict__.get("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if _acceptance.get(marker) != "FAILED":  # parametrized criteria fail if any case fails
            _acceptance[marker] = report.outcome.upper()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        n, title = m.args
        report.__dict__["acceptance"] = f"{n:>2}. {title}"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=lambda k: int(k.split(".")[0])):
        status = _acceptance[key].replace("PASSED", "PASS").replace("FAILED", "FAIL").replace("SKIPPED", "SKIP")
        terminalreporter.write_line(f"[{status:4}] {key}")


def desk_config(seed: int = 0, **overrides) -> TrainConfig:
    """The scaled-down learning setting used by the multi-seed acceptance runs."""
    base = dict(
        env_name="point_mass",
        seed=seed,
        image_size=64,
        batch_size=64,
        num_filters=16,
        hidden_dim=256,
        transition_hidden_dim=256,
        action_hidden_dim=128,
        total_env_steps=30_000,
        init_steps=1000,
        eval_interval=2500,
        eval_episodes=5,
        replay_capacity=30_000,
        checkpoint_buffer=False,
    )
    base.update(overrides)
    return TrainConfig(**base)


desk_only = pytest.mark.skipif(not DESK_SCALE, reason="multi-hour desk-scale run; set CODY_DESK_SCALE=1")
