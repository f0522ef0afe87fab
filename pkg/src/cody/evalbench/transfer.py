"""Frozen-encoder transfer: reuse a trained encoder, train a fresh SAC head."""

from __future__ import annotations

from pathlib import Path

from cody.config import TrainConfig
from cody.trainer import TrainState, build_env, load_checkpoint, train_loop


def transfer_config(source_ckpt: str | Path, target_env: str, config: TrainConfig) -> TrainConfig:
    payload = load_checkpoint(source_ckpt)
    src = TrainConfig.from_dict(payload["config"])
    probe_env = build_env(config, env_name=target_env)
    if tuple(src.obs_shape) != tuple(probe_env.obs_shape):
        raise ValueError(
            f"source encoder was trained on observations {src.obs_shape}, "
            f"target environment {target_env!r} produces {probe_env.obs_shape}"
        )
    return config.replace(
        env_name=target_env,
        freeze_encoder=True,
        cody_enabled=False,
        encoder_init=str(Path(source_ckpt).resolve()),
        feature_dim=src.feature_dim,
        num_conv_layers=src.num_conv_layers,
        num_filters=src.num_filters,
        embedding_norm=src.embedding_norm,
    )


def transfer(source_ckpt: str | Path, target_env: str, config: TrainConfig, run_dir: str | Path) -> TrainState:
    """Train new critics, policy and temperature on ``target_env`` over a fixed encoder.

    The encoder is loaded from ``source_ckpt``, receives no gradient and no
    EMA update, and the auxiliary losses are switched off.
    """
    cfg = transfer_config(source_ckpt, target_env, config)
    return train_loop(cfg, run_dir)
