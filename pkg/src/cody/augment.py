"""Random-shift image augmentation on uint8 observation batches."""

from __future__ import annotations

import numpy as np


def draw_offsets(batch_size: int, max_shift: int, rng: np.random.Generator) -> np.ndarray:
    """Integer (dx, dy) per row, uniform on [-max_shift, max_shift]^2."""
    return rng.integers(-max_shift, max_shift + 1, size=(batch_size, 2))


def shift(batch: np.ndarray, offsets: np.ndarray, max_shift: int) -> np.ndarray:
    """Translate each row of ``batch`` (B, C, H, W) by its (dx, dy) offset.

    Implemented as edge-replicate padding by ``max_shift`` followed by a crop
    back to (H, W). Positive dx moves content right, positive dy moves it
    down. All channels of a row (every stacked frame) share the offset.
    """
    if max_shift == 0:
        return batch.copy()
    b, _, h, w = batch.shape
    if h < 2 * max_shift + 1 or w < 2 * max_shift + 1:
        raise ValueError("image too small for the requested shift")
    offsets = np.asarray(offsets)
    if np.any(np.abs(offsets) > max_shift):
        raise ValueError("offset exceeds max_shift")
    s = max_shift
    padded = np.pad(batch, ((0, 0), (0, 0), (s, s), (s, s)), mode="edge")
    out = np.empty_like(batch)
    for i in range(b):
        dx, dy = offsets[i]
        top, left = s - dy, s - dx
        out[i] = padded[i, :, top : top + h, left : left + w]
    return out


def random_shift(batch: np.ndarray, rng: np.random.Generator, max_shift: int = 4) -> np.ndarray:
    offsets = draw_offsets(batch.shape[0], max_shift, rng)
    return shift(batch, offsets, max_shift)


def two_views(
    batch: np.ndarray, rng: np.random.Generator, max_shift: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """Two independently shifted views of the same batch."""
    return random_shift(batch, rng, max_shift), random_shift(batch, rng, max_shift)
