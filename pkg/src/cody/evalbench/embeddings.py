"""Collect embeddings of visited observations alongside the true states."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from cody.nets import pixels_to_float


@dataclass
class EmbeddingDump:
    embeddings: np.ndarray  # (N, d)
    states: np.ndarray  # (N, state_dim)
    thumbnails: np.ndarray  # (N, 3, H, W) uint8, newest frame

    def __post_init__(self) -> None:
        n = len(self.embeddings)
        if len(self.states) != n or len(self.thumbnails) != n:
            raise ValueError("embeddings, states and thumbnails must be row-aligned")

    def __len__(self) -> int:
        return len(self.embeddings)

    def save(self, directory: str | Path, env_name: str = "", source: str = "") -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(
            directory / "embeddings.npz",
            embeddings=self.embeddings,
            states=self.states,
            thumbnails=self.thumbnails,
        )
        manifest = {
            "file": "embeddings.npz",
            "rows": len(self),
            "embedding_dim": int(self.embeddings.shape[1]),
            "state_dim": int(self.states.shape[1]),
            "thumbnail_shape": list(self.thumbnails.shape[1:]),
            "env": env_name,
            "source_checkpoint": source,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "EmbeddingDump":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        with np.load(directory / manifest["file"]) as data:
            return cls(data["embeddings"], data["states"], data["thumbnails"])


def collect_embeddings(agent, env, n: int, rng: np.random.Generator, deterministic: bool = False) -> EmbeddingDump:
    """Roll out the agent's policy and encode ``n`` visited observations."""
    observations, states, thumbs = [], [], []
    obs = env.reset(rng)
    while len(observations) < n:
        observations.append(obs)
        states.append(env.physical_state())
        thumbs.append(obs[-3:])
        obs, _, done = env.step(agent.act(obs, deterministic=deterministic))
        if done:
            obs = env.reset(rng)
    pixels = np.stack(observations)
    with torch.no_grad():
        z = torch.cat([agent.encoder(pixels_to_float(chunk)) for chunk in np.array_split(pixels, max(1, n // 256))])
    return EmbeddingDump(z.numpy().astype(np.float64), np.stack(states), np.stack(thumbs))


def export_embeddings(ckpt: str | Path, n: int, rng: np.random.Generator, env_name: str | None = None) -> EmbeddingDump:
    from cody.trainer import restore_agent

    agent, env = restore_agent(ckpt, env_name)
    return collect_embeddings(agent, env, n, rng)


def grid_mosaic(thumbnails: np.ndarray, cells: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Tile (N, 3, h, w) thumbnails into an (rows*h, cols*w, 3) image at their cells."""
    _, _, h, w = thumbnails.shape
    canvas = np.zeros((rows * h, cols * w, 3), dtype=np.uint8)
    for thumb, (r, c) in zip(thumbnails, cells):
        canvas[r * h : (r + 1) * h, c * w : (c + 1) * w] = thumb.transpose(1, 2, 0)
    return canvas
