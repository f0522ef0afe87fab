"""Run configuration: hyperparameters, ablation switches and env selection."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

ABLATIONS = ("full", "non_tem", "non_pred", "non_mv")


@dataclass
class TrainConfig:
    """All knobs of a training run.

    Defaults follow the shared hyperparameter table of the method (buffer
    100000, 1000 warm-up steps, Adam, tau_Q 0.01 every 2 steps, lr 1e-3 for
    actor/critic and 1e-5 for the representation group, tau_e 0.05,
    discount 0.99, initial temperature 0.1, lambda 100, eta 1000).
    """

    env_name: str = "point_mass"
    seed: int = 0
    total_env_steps: int = 100_000
    init_steps: int = 1000
    batch_size: int = 256
    action_repeat: int | None = None  # None -> environment default
    image_size: int = 84
    frame_stack: int = 3
    episode_budget: int = 1000  # underlying simulator steps per episode

    discount: float = 0.99
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    lr_encoder: float = 1e-5
    lr_temperature: float = 1e-4
    q_ema: float = 0.01
    encoder_ema: float = 0.05
    critic_target_update_freq: int = 2
    init_temperature: float = 0.1
    learn_temperature: bool = True

    lam: float = 100.0
    eta: float = 1000.0
    ablation: str = "full"

    replay_capacity: int = 100_000
    max_shift: int = 4

    feature_dim: int = 50
    action_embed_dim: int = 16
    action_hidden_dim: int = 512
    transition_hidden_dim: int = 1024
    hidden_dim: int = 1024
    num_conv_layers: int = 4
    num_filters: int = 32
    embedding_norm: str = "layernorm"  # or "none"

    eval_interval: int = 10_000
    eval_episodes: int = 10
    log_interval: int = 1
    save_checkpoints: bool = True
    checkpoint_buffer: bool = True

    # transfer protocol
    freeze_encoder: bool = False
    cody_enabled: bool = True
    encoder_init: str = ""

    extra: dict[str, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        for name in ("q_ema", "encoder_ema"):
            tau = getattr(self, name)
            # tau = 1 is a hard copy and tau = 0 freezes the target
            if not 0.0 <= tau <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {tau}")
        if self.lam < 0 or self.eta < 0:
            raise ValueError("loss weights lambda and eta must be non-negative")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 so every row has in-batch negatives")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.frame_stack < 1:
            raise ValueError("frame_stack must be >= 1")
        if self.replay_capacity < 1:
            raise ValueError("replay_capacity must be positive")
        if self.max_shift < 0 or 2 * self.max_shift >= self.image_size:
            raise ValueError("max_shift must satisfy 0 <= max_shift < image_size / 2")
        if self.critic_target_update_freq < 1:
            raise ValueError("critic_target_update_freq must be >= 1")
        if self.init_temperature <= 0:
            raise ValueError("init_temperature must be positive")
        if self.embedding_norm not in ("layernorm", "none"):
            raise ValueError("embedding_norm must be 'layernorm' or 'none'")
        if self.eval_interval < 1 or self.eval_episodes < 1 or self.log_interval < 1:
            raise ValueError("eval_interval, eval_episodes and log_interval must be >= 1")

    @property
    def obs_shape(self) -> tuple[int, int, int]:
        return (3 * self.frame_stack, self.image_size, self.image_size)

    def replace(self, **changes: Any) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("extra")
        return d

    # flat key=value files -------------------------------------------------

    def dump(self, path: str | Path) -> None:
        lines = [f"{k}={_format(v)}" for k, v in self.to_dict().items()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> "TrainConfig":
        known = {f.name: f for f in fields(cls) if f.name != "extra"}
        kwargs: dict[str, Any] = {}
        for key, raw in values.items():
            if key not in known:
                raise KeyError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, raw, known[key].type)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path, **overrides: Any) -> "TrainConfig":
        values = parse_kv_file(path)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(values)


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _format(value: Any) -> str:
    if value is None:
        return ""
    return str(value)


def _coerce(key: str, raw: Any, annotation: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    ann = str(annotation)
    if "None" in ann and raw in ("", "None", "none"):
        return None
    if ann.startswith("bool"):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: cannot parse boolean from {raw!r}")
    if ann.startswith("int"):
        return int(float(raw)) if "e" in raw.lower() else int(raw)
    if ann.startswith("float"):
        return float(raw)
    return raw
