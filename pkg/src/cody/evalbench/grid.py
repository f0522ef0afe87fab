"""2-D projections of embeddings and their quantization onto a cell grid."""

from __future__ import annotations

import numpy as np


def pca_project(x: np.ndarray, dims: int = 2) -> np.ndarray:
    """Project rows of ``x`` onto their leading principal components."""
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    proj = centered @ vt[:dims].T
    if proj.shape[1] < dims:
        proj = np.pad(proj, ((0, 0), (0, dims - proj.shape[1])))
    return proj


def normalize_to_grid(points: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Affinely map points to grid coordinates (x in [0, cols-1], y in [0, rows-1])."""
    points = np.asarray(points, dtype=np.float64)
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    unit = (points - lo) / span
    return unit * np.array([cols - 1, rows - 1], dtype=np.float64)


def assignment_cost(points_grid: np.ndarray, cells: np.ndarray) -> float:
    """Total squared displacement between grid-space points and (row, col) cells."""
    xy = np.stack([cells[:, 1], cells[:, 0]], axis=1)
    return float(((points_grid - xy) ** 2).sum())


def grid_assign(points: np.ndarray, rows: int = 30, cols: int = 20, method: str = "greedy") -> np.ndarray:
    """Assign each 2-D point to a distinct cell of a ``rows x cols`` grid.

    Points are first stretched over the grid, then matched to cells by
    ascending squared distance (``greedy``) or by an exact linear assignment
    (``optimal``). Returns an (N, 2) integer array of (row, col).
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n > rows * cols:
        raise ValueError(f"{n} points do not fit on a {rows}x{cols} grid")
    if n == 0:
        return np.zeros((0, 2), dtype=int)
    g = normalize_to_grid(points, rows, cols)
    cell_r, cell_c = np.divmod(np.arange(rows * cols), cols)
    cost = (g[:, 0:1] - cell_c[None, :]) ** 2 + (g[:, 1:2] - cell_r[None, :]) ** 2

    if method == "optimal":
        from scipy.optimize import linear_sum_assignment

        pts, cells = linear_sum_assignment(cost)
        chosen = np.empty(n, dtype=int)
        chosen[pts] = cells
    elif method == "greedy":
        order = np.argsort(cost, axis=None, kind="stable")
        chosen = np.full(n, -1, dtype=int)
        taken = np.zeros(rows * cols, dtype=bool)
        remaining = n
        for flat in order:
            p, c = divmod(int(flat), rows * cols)
            if chosen[p] >= 0 or taken[c]:
                continue
            chosen[p] = c
            taken[c] = True
            remaining -= 1
            if remaining == 0:
                break
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.stack([cell_r[chosen], cell_c[chosen]], axis=1)
