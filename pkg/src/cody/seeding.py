"""One master seed fanned out into independent, named random streams.

Each consumer (env, augmentation, policy sampling, buffer sampling, network
init, ...) draws from its own stream, so adding draws in one consumer never
shifts another.
"""

from __future__ import annotations

import zlib

import numpy as np
import torch

STREAMS = ("env", "eval_env", "augment", "policy", "buffer", "init", "explore")


def _stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream_seed(master: int, name: str) -> int:
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=(_stream_key(name),))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def numpy_stream(master: int, name: str) -> np.random.Generator:
    return np.random.default_rng(stream_seed(master, name))


def torch_stream(master: int, name: str) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(stream_seed(master, name))
    return gen
