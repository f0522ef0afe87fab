"""Long learning runs behind CODY_DESK_SCALE=1.

Point CODY_DESK_DIR at the directory used by the acceptance runs to reuse
their finished training runs instead of starting new ones.
"""

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from cody.envs import make_env
from cody.evalbench.embeddings import export_embeddings
from cody.evalbench.evaluation import random_policy_baseline
from cody.evalbench.probe import smoothness_probe
from cody.evalbench.transfer import transfer
from cody.trainer import read_eval, train_loop

from conftest import desk_config, desk_only

pytestmark = [desk_only, pytest.mark.slow]


@pytest.fixture(scope="module")
def root(tmp_path_factory):
    path = os.environ.get("CODY_DESK_DIR")
    return Path(path) if path else tmp_path_factory.mktemp("desk")


def finished(run_dir: Path, steps: int) -> bool:
    records = read_eval(run_dir)
    return bool(records) and records[-1].env_step >= steps


def run(config, run_dir: Path) -> Path:
    if not finished(run_dir, config.total_env_steps):
        train_loop(config, run_dir)
    return run_dir


def last_ckpt(run_dir: Path) -> Path:
    return sorted((run_dir / "checkpoints").glob("ckpt_*.pt"))[-1]


def test_temperature_bounded_over_10k_steps(root):
    d = run(desk_config(0, total_env_steps=10_000), root / "temp_s0")
    with open(d / "metrics.csv", newline="") as fh:
        temps = [float(r["temperature"]) for r in csv.DictReader(fh)]
    assert temps and all(1e-6 <= t <= 1e3 for t in temps)


def test_transfer_beats_scratch_at_20k(root):
    src = run(desk_config(0, env_name="point_mass_goal_a"), root / "goal_a_s0")
    cfg = desk_config(0, env_name="point_mass_goal_b", total_env_steps=20_000)
    scratch = run(cfg, root / "scratch_b_s0")
    moved = root / "transfer_b_s0"
    if not finished(moved, 20_000):
        transfer(last_ckpt(src), "point_mass_goal_b", cfg, moved)
    assert read_eval(moved)[-1].mean_return > read_eval(scratch)[-1].mean_return


def test_same_env_transfer_beats_random(root):
    src = run(desk_config(0), root / "full_s0")
    cfg = desk_config(0, total_env_steps=20_000)
    same = root / "transfer_same_s0"
    if not finished(same, 20_000):
        transfer(last_ckpt(src), "point_mass", cfg, same)
    env = make_env("point_mass", image_size=cfg.image_size, episode_budget=cfg.episode_budget)
    baseline = random_policy_baseline(env, 10, np.random.default_rng(0)).mean_return
    later = [r.mean_return for r in read_eval(same) if r.env_step >= 10_000]
    assert later and min(later) > baseline


def test_trained_encoder_smoothness_above_half(root):
    src = run(desk_config(0), root / "full_s0")
    dump = export_embeddings(last_ckpt(src), 600, np.random.default_rng(0))
    result = smoothness_probe(dump.embeddings, dump.states, np.random.default_rng(1))
    assert result.score > 0.5


def test_last_three_evals_beat_twice_random(root):
    d = run(desk_config(0), root / "full_s0")
    cfg = desk_config(0)
    env = make_env("point_mass", image_size=cfg.image_size, episode_budget=cfg.episode_budget)
    baseline = random_policy_baseline(env, 10, np.random.default_rng(0)).mean_return
    last = [r.mean_return for r in read_eval(d)[-3:]]
    assert np.mean(last) > 2 * baseline
