"""Tiny anti-aliased rasterizer for discs and rods on a black canvas.

World coordinates span [-1, 1] on both axes with +y pointing up. Coverage of
a pixel is approximated by ``clip(radius + 0.5 - d, 0, 1)`` where ``d`` is the
distance in pixels from the pixel center to the shape's skeleton.
"""

from __future__ import annotations

import numpy as np


def blank(size: int) -> np.ndarray:
    return np.zeros((size, size, 3), dtype=np.float64)


def _pixel_grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    centers = np.arange(size, dtype=np.float64) + 0.5
    return centers[None, :], centers[:, None]  # px (1, W), py (H, 1)


def world_to_pixel(x: float, y: float, size: int) -> tuple[float, float]:
    return (x + 1.0) * 0.5 * size, (1.0 - y) * 0.5 * size


def _composite(canvas: np.ndarray, coverage: np.ndarray, color) -> None:
    cov = coverage[..., None]
    canvas *= 1.0 - cov
    canvas += cov * np.asarray(color, dtype=np.float64)


def draw_disc(canvas: np.ndarray, center, radius: float, color) -> None:
    size = canvas.shape[0]
    cx, cy = world_to_pixel(center[0], center[1], size)
    r = radius * 0.5 * size
    px, py = _pixel_grid(size)
    dist = np.sqrt((px - cx) ** 2 + (py - cy) ** 2)
    _composite(canvas, np.clip(r + 0.5 - dist, 0.0, 1.0), color)


def draw_rod(canvas: np.ndarray, start, end, width: float, color) -> None:
    """Capsule from ``start`` to ``end`` with total thickness ``width``."""
    size = canvas.shape[0]
    ax, ay = world_to_pixel(start[0], start[1], size)
    bx, by = world_to_pixel(end[0], end[1], size)
    half = width * 0.25 * size
    px, py = _pixel_grid(size)
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        t = np.zeros_like(px + py)
    else:
        t = np.clip(((px - ax) * dx + (py - ay) * dy) / seg2, 0.0, 1.0)
    dist = np.sqrt((px - (ax + t * dx)) ** 2 + (py - (ay + t * dy)) ** 2)
    _composite(canvas, np.clip(half + 0.5 - dist, 0.0, 1.0), color)


def to_uint8(canvas: np.ndarray) -> np.ndarray:
    """(H, W, 3) float canvas -> (3, H, W) uint8 frame."""
    return np.clip(np.rint(canvas), 0, 255).astype(np.uint8).transpose(2, 0, 1)
