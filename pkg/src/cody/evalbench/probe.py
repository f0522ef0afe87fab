"""Does embedding geometry follow true-state geometry?"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr


@dataclass
class ProbeResult:
    score: float  # nan when undefined
    defined: bool
    null_mean: float
    null_std: float
    null_p99: float
    n_pairs: int

    @property
    def beats_null(self) -> bool:
        return self.defined and self.score > self.null_p99


def _pairs(n: int, max_pairs: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    total = n * (n - 1) // 2
    if total <= max_pairs:
        i, j = np.triu_indices(n, k=1)
        return i, j
    i = rng.integers(0, n, size=max_pairs)
    j = rng.integers(0, n - 1, size=max_pairs)
    j = np.where(j >= i, j + 1, j)
    return i, j


def _pair_distances(x: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x[i] - x[j], axis=1)


def smoothness_probe(
    embeddings: np.ndarray,
    states: np.ndarray,
    rng: np.random.Generator,
    max_pairs: int = 20_000,
    permutations: int = 200,
) -> ProbeResult:
    """Spearman correlation of pairwise state vs. embedding distances.

    The null distribution comes from shuffling which state belongs to which
    embedding. Constant embeddings make the score undefined.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    states = np.asarray(states, dtype=np.float64)
    if len(embeddings) != len(states):
        raise ValueError("embeddings and states must be row-aligned")
    n = len(states)
    if n < 3:
        raise ValueError("need at least 3 points")
    i, j = _pairs(n, max_pairs, rng)
    d_state = _pair_distances(states, i, j)
    d_emb = _pair_distances(embeddings, i, j)
    if np.ptp(d_emb) == 0.0 or np.ptp(d_state) == 0.0:
        return ProbeResult(math.nan, False, math.nan, math.nan, math.nan, len(i))

    score = float(spearmanr(d_state, d_emb).statistic)
    null = np.empty(permutations)
    for k in range(permutations):
        perm = rng.permutation(n)
        null[k] = spearmanr(_pair_distances(states[perm], i, j), d_emb).statistic
    return ProbeResult(
        score=score,
        defined=True,
        null_mean=float(null.mean()),
        null_std=float(null.std()),
        null_p99=float(np.quantile(null, 0.99)),
        n_pairs=len(i),
    )
