"""Interleaved environment interaction and gradient updates.

After ``init_steps`` uniformly random actions seed the buffer, every
environment step is followed by exactly one gradient step.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from cody import seeding
from cody.agent import PHASES, CodyAgent, NonFiniteLossError, prepare_batch
from cody.config import TrainConfig
from cody.envs import PixelEnv, make_env
from cody.evalbench.evaluation import EvalRecord, evaluate
from cody.losses import LossBundle
from cody.replay import BufferNotWarmError, ReplayBuffer, Transition

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "cody-checkpoint"
CHECKPOINT_VERSION = 1

METRIC_COLUMNS = (
    "step",
    "episode_return",
    "L_pred",
    "L_TMI",
    "L_MVMI",
    "L_CoDy",
    "critic_loss",
    "actor_loss",
    "temperature",
    "wallclock_ms_per_1k_steps",
)
EVAL_COLUMNS = ("env_step", "mean_return", "std_return", "episodes", "wallclock_ms_per_1k_env_steps")


def build_env(config: TrainConfig, seed: int | None = None, env_name: str | None = None) -> PixelEnv:
    return make_env(
        env_name or config.env_name,
        image_size=config.image_size,
        frame_stack=config.frame_stack,
        action_repeat=config.action_repeat,
        episode_budget=config.episode_budget,
        seed=seed,
    )


@dataclass
class TrainState:
    config: TrainConfig
    env: PixelEnv
    eval_env: PixelEnv
    buffer: ReplayBuffer
    agent: CodyAgent
    rngs: dict[str, np.random.Generator]
    policy_gen: torch.Generator
    obs: np.ndarray | None = None
    env_steps: int = 0
    grad_steps: int = 0
    episode_return: float = 0.0
    last_episode_return: float = math.nan
    episodes: int = 0
    trace: list | None = field(default=None, repr=False)

    @classmethod
    def create(cls, config: TrainConfig, encoder_state: dict | None = None) -> "TrainState":
        seed = config.seed
        env = build_env(config, seed=seeding.stream_seed(seed, "env"))
        eval_env = build_env(config, seed=seeding.stream_seed(seed, "eval_env"))
        if env.obs_shape != config.obs_shape:
            raise ValueError(f"environment observation {env.obs_shape} != configured {config.obs_shape}")
        agent = CodyAgent(env.obs_shape, env.action_dim, config, init_seed=seeding.stream_seed(seed, "init"))
        if encoder_state is None and config.encoder_init:
            encoder_state = load_encoder_state(config.encoder_init, env.obs_shape)
        if encoder_state is not None:
            agent.load_encoder(encoder_state)
        rngs = {name: seeding.numpy_stream(seed, name) for name in ("env", "eval_env", "augment", "buffer", "explore")}
        state = cls(
            config=config,
            env=env,
            eval_env=eval_env,
            buffer=ReplayBuffer(env.obs_shape, env.action_dim, config.replay_capacity),
            agent=agent,
            rngs=rngs,
            policy_gen=seeding.torch_stream(seed, "policy"),
        )
        state.obs = env.reset(rngs["env"])
        return state

    def parameter_snapshot(self) -> dict[str, torch.Tensor]:
        return {
            f"{name}.{k}": v.detach().clone()
            for name, module in self.agent.modules().items()
            for k, v in module.state_dict().items()
        }


def env_step(state: TrainState) -> None:
    """Act once in the training env and store the transition."""
    cfg = state.config
    if state.env_steps < cfg.init_steps:
        action = state.rngs["explore"].uniform(-1.0, 1.0, size=state.env.action_dim).astype(np.float32)
    else:
        action = state.agent.act(state.obs, deterministic=False, generator=state.policy_gen)
    next_obs, reward, done = state.env.step(action)
    # episodes only end by time limit, which is not a terminal state
    state.buffer.push(Transition(state.obs, action, reward, next_obs, done=False))
    state.episode_return += reward
    state.env_steps += 1
    if done:
        state.episodes += 1
        state.last_episode_return = state.episode_return
        state.episode_return = 0.0
        state.obs = state.env.reset()
    else:
        state.obs = next_obs


def train_step(state: TrainState) -> LossBundle:
    """Sample a minibatch and run the update phases in order."""
    cfg = state.config
    if state.buffer.size < cfg.batch_size:
        raise BufferNotWarmError(f"buffer holds {state.buffer.size} < batch size {cfg.batch_size}")
    batch = state.buffer.sample(cfg.batch_size, state.rngs["buffer"])
    tb = prepare_batch(batch, state.rngs["augment"], cfg.max_shift)
    bundle = state.agent.update(tb, generator=state.policy_gen, trace=state.trace)
    state.grad_steps += 1
    return bundle


# -- run directory I/O ----------------------------------------------------------


def append_row(path: Path, columns, row: dict) -> None:
    """Append one CSV row with a single write call."""
    new = not path.exists()
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns)
    if new:
        writer.writeheader()
    writer.writerow({k: _fmt(row.get(k)) for k in columns})
    with open(path, "a", newline="") as fh:
        fh.write(buf.getvalue())
        fh.flush()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_save(obj, path: Path) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(obj, tmp)
    os.replace(tmp, path)


def save_checkpoint(state: TrainState, directory: Path, include_buffer: bool = True) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": state.config.to_dict(),
        "agent": state.agent.state_dict(),
        "env_steps": state.env_steps,
        "grad_steps": state.grad_steps,
        "episodes": state.episodes,
        "episode_return": state.episode_return,
        "last_episode_return": state.last_episode_return,
        "obs": state.obs,
        "env": state.env,
        "eval_env": state.eval_env,
        "rngs": {k: g.bit_generator.state for k, g in state.rngs.items()},
        "policy_gen": state.policy_gen.get_state(),
    }
    path = directory / f"ckpt_{state.env_steps:08d}.pt"
    _atomic_save(payload, path)
    if include_buffer:
        _atomic_save({"step": state.env_steps, "buffer": state.buffer}, directory / "buffer.pt")
    return path


def load_checkpoint(path: str | Path) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a checkpoint of this package")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    return payload


def load_encoder_state(path: str | Path, obs_shape: tuple[int, ...] | None = None) -> dict:
    payload = load_checkpoint(path)
    src = TrainConfig.from_dict(payload["config"])
    if obs_shape is not None and tuple(src.obs_shape) != tuple(obs_shape):
        raise ValueError(f"encoder expects observations {src.obs_shape}, environment produces {tuple(obs_shape)}")
    return payload["agent"]["modules"]["encoder"]


def restore_agent(path: str | Path, env_name: str | None = None) -> tuple[CodyAgent, PixelEnv]:
    """Agent weights from a checkpoint plus a fresh env instance to run them in."""
    payload = load_checkpoint(path)
    config = TrainConfig.from_dict(payload["config"])
    env = build_env(config, seed=seeding.stream_seed(config.seed, "export"), env_name=env_name)
    if env.obs_shape != config.obs_shape:
        raise ValueError(f"checkpoint expects observations {config.obs_shape}, environment produces {env.obs_shape}")
    agent = CodyAgent(env.obs_shape, env.action_dim, config)
    agent.load_state_dict(payload["agent"])
    return agent, env


def restore_state(path: str | Path) -> TrainState:
    """Rebuild a TrainState from a checkpoint (and the buffer saved next to it)."""
    path = Path(path)
    payload = load_checkpoint(path)
    config = TrainConfig.from_dict(payload["config"])
    state = TrainState.create(config)
    state.agent.load_state_dict(payload["agent"])
    state.env = payload["env"]
    state.eval_env = payload["eval_env"]
    state.obs = payload["obs"]
    state.env_steps = payload["env_steps"]
    state.grad_steps = payload["grad_steps"]
    state.episodes = payload["episodes"]
    state.episode_return = payload["episode_return"]
    state.last_episode_return = payload["last_episode_return"]
    for k, g in state.rngs.items():
        g.bit_generator.state = payload["rngs"][k]
    state.policy_gen.set_state(payload["policy_gen"])
    buf_path = path.parent / "buffer.pt"
    if buf_path.exists():
        saved = torch.load(buf_path, map_location="cpu", weights_only=False)
        if saved["step"] != state.env_steps:
            raise ValueError("buffer snapshot does not match the checkpoint step")
        state.buffer = saved["buffer"]
    elif state.env_steps > 0:
        raise FileNotFoundError(f"no replay buffer snapshot next to {path}")
    return state


# -- main loop -----------------------------------------------------------------


def train_loop(
    config: TrainConfig,
    run_dir: str | Path,
    state: TrainState | None = None,
    encoder_state: dict | None = None,
) -> TrainState:
    """Run (or resume) training and write metrics, evals and checkpoints to ``run_dir``."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if config.init_steps < config.batch_size and config.total_env_steps > config.init_steps:
        raise ValueError("init_steps must be >= batch_size so the first update has a warm buffer")
    if state is None:
        state = TrainState.create(config, encoder_state=encoder_state)
        config.dump(run_dir / "config.txt")
    metrics_path = run_dir / "metrics.csv"
    eval_path = run_dir / "eval.csv"
    episodes_path = run_dir / "episodes.csv"
    eval_rng = state.rngs["eval_env"]

    bundle = LossBundle()
    tick = time.perf_counter()
    window_steps = 0
    ms_per_1k = math.nan
    while state.env_steps < config.total_env_steps:
        episodes_before = state.episodes
        env_step(state)
        window_steps += 1
        if state.episodes > episodes_before:
            append_row(
                episodes_path,
                ("env_step", "episode_return"),
                {"env_step": state.env_steps, "episode_return": state.last_episode_return},
            )

        if state.env_steps > config.init_steps:
            try:
                bundle = train_step(state)
            except NonFiniteLossError as err:
                _dump_diagnostics(run_dir, state, err)
                raise
            if state.grad_steps % config.log_interval == 0:
                now = time.perf_counter()
                ms_per_1k = (now - tick) * 1e6 / max(window_steps, 1)
                tick, window_steps = now, 0
                append_row(metrics_path, METRIC_COLUMNS, {"step": state.env_steps, **bundle.as_dict(), "wallclock_ms_per_1k_steps": ms_per_1k})

        if state.env_steps % config.eval_interval == 0:
            record = evaluate(state.agent, state.eval_env, config.eval_episodes, eval_rng, state.env_steps, ms_per_1k)
            append_row(eval_path, EVAL_COLUMNS, asdict(record))
            append_row(
                metrics_path,
                METRIC_COLUMNS,
                {"step": state.env_steps, "episode_return": record.mean_return, **bundle.as_dict(), "wallclock_ms_per_1k_steps": ms_per_1k},
            )
            log.info("step %d eval return %.2f +- %.2f", state.env_steps, record.mean_return, record.std_return)
            if config.save_checkpoints:
                save_checkpoint(state, run_dir / "checkpoints", include_buffer=config.checkpoint_buffer)
            tick = time.perf_counter()
            window_steps = 0
    return state


def _dump_diagnostics(run_dir: Path, state: TrainState, err: NonFiniteLossError) -> None:
    norms = {
        f"{name}.{k}": float(v.float().norm())
        for name, module in state.agent.modules().items()
        for k, v in module.state_dict().items()
    }
    dump = {
        "phase": err.phase,
        "losses": err.bundle.as_dict(),
        "env_steps": state.env_steps,
        "grad_steps": state.grad_steps,
        "parameter_norms": norms,
    }
    (run_dir / "diagnostics.json").write_text(json.dumps(dump, indent=2, default=str))


def read_eval(run_dir: str | Path) -> list[EvalRecord]:
    path = Path(run_dir) / "eval.csv"
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return [
            EvalRecord(
                env_step=int(r["env_step"]),
                mean_return=float(r["mean_return"]),
                std_return=float(r["std_return"]),
                episodes=int(r["episodes"]),
                wallclock_ms_per_1k_env_steps=float(r["wallclock_ms_per_1k_env_steps"] or "nan"),
            )
            for r in csv.DictReader(fh)
        ]


__all__ = [
    "PHASES",
    "TrainState",
    "env_step",
    "train_step",
    "train_loop",
    "save_checkpoint",
    "load_checkpoint",
    "restore_state",
    "read_eval",
]
