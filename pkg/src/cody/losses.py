"""Auxiliary representation losses: latent prediction, temporal InfoNCE and
multi-view InfoNCE over predicted next embeddings, plus their weighted sum.

Scores of the bilinear classifiers are kept in log space; the exponentials
never get materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import torch

from cody.config import ABLATIONS


@dataclass
class CodyBatchOutputs:
    """Tensors produced by one forward pass of the representation model.

    ``z2``, ``z_next`` and ``zhat2`` come from the target networks and are
    detached; ``zhat1`` carries gradients to the online encoder, the action
    encoder and the online transition model.
    """

    z1: torch.Tensor
    z2: torch.Tensor
    c: torch.Tensor
    z_next: torch.Tensor
    zhat1: torch.Tensor
    zhat2: torch.Tensor


@dataclass
class LossWeights:
    lam: float = 100.0  # temporal InfoNCE weight
    eta: float = 1000.0  # prediction weight
    ablation: str = "full"

    def __post_init__(self) -> None:
        if self.lam < 0 or self.eta < 0:
            raise ValueError("loss weights must be non-negative")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}")

    @property
    def use_pred(self) -> bool:
        return self.ablation != "non_pred"

    @property
    def use_tmi(self) -> bool:
        return self.ablation != "non_tem"

    @property
    def use_mvmi(self) -> bool:
        return self.ablation != "non_mv"


@dataclass
class LossBundle:
    L_pred: float = 0.0
    L_TMI: float = 0.0
    L_MVMI: float = 0.0
    L_CoDy: float = 0.0
    critic_loss: float = 0.0
    actor_loss: float = 0.0
    temperature: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.as_dict().values())


def infonce(scores: torch.Tensor) -> torch.Tensor:
    """InfoNCE loss for a (B, B) score matrix whose diagonal holds the positives.

    ``-mean_i [scores[i, i] - logsumexp_j scores[i, j]]``.
    """
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ValueError(f"expected a square score matrix, got {tuple(scores.shape)}")
    if scores.shape[0] < 2:
        raise ValueError("InfoNCE needs a batch of at least 2 (no negatives otherwise)")
    positives = scores.diagonal()
    return -(positives - torch.logsumexp(scores, dim=1)).mean()


def pred_loss(zhat1: torch.Tensor, z_next: torch.Tensor) -> torch.Tensor:
    """Mean over the batch of the squared l2 prediction error."""
    if zhat1.shape != z_next.shape:
        raise ValueError(f"shape mismatch {tuple(zhat1.shape)} vs {tuple(z_next.shape)}")
    return (zhat1 - z_next.detach()).pow(2).sum(dim=-1).mean()


def tmi_scores(z1: torch.Tensor, c: torch.Tensor, z_next: torch.Tensor, W1: torch.Tensor) -> torch.Tensor:
    m = torch.cat([z1, c], dim=-1)
    if m.shape[-1] != W1.shape[0] or z_next.shape[-1] != W1.shape[1]:
        raise ValueError(
            f"W1 {tuple(W1.shape)} incompatible with context {m.shape[-1]} / target {z_next.shape[-1]}"
        )
    return m @ W1 @ z_next.detach().T


def tmi_loss(z1: torch.Tensor, c: torch.Tensor, z_next: torch.Tensor, W1: torch.Tensor) -> torch.Tensor:
    """Temporal InfoNCE between concat(z1, c) and the next-state embedding."""
    return infonce(tmi_scores(z1, c, z_next, W1))


def mvmi_scores(zhat1: torch.Tensor, zhat2: torch.Tensor, W2: torch.Tensor) -> torch.Tensor:
    if zhat1.shape[-1] != W2.shape[0] or zhat2.shape[-1] != W2.shape[1]:
        raise ValueError(f"W2 {tuple(W2.shape)} incompatible with predictions")
    return zhat1 @ W2 @ zhat2.detach().T


def mvmi_loss(zhat1: torch.Tensor, zhat2: torch.Tensor, W2: torch.Tensor) -> torch.Tensor:
    """Multi-view InfoNCE between online and target next-embedding predictions."""
    return infonce(mvmi_scores(zhat1, zhat2, W2))


def total_loss(
    out: CodyBatchOutputs,
    W1: torch.Tensor,
    W2: torch.Tensor,
    weights: LossWeights,
) -> tuple[torch.Tensor, LossBundle]:
    """``L_MVMI + lam * L_TMI + eta * L_pred`` with ablated terms dropped.

    Dropped terms are not evaluated and are reported as 0 in the bundle.
    """
    terms: list[torch.Tensor] = []
    bundle = LossBundle()
    if weights.use_mvmi:
        mv = mvmi_loss(out.zhat1, out.zhat2, W2)
        terms.append(mv)
        bundle.L_MVMI = mv.item()
    if weights.use_tmi and weights.lam > 0:
        tmi = tmi_loss(out.z1, out.c, out.z_next, W1)
        terms.append(weights.lam * tmi)
        bundle.L_TMI = tmi.item()
    if weights.use_pred and weights.eta > 0:
        pred = pred_loss(out.zhat1, out.z_next)
        terms.append(weights.eta * pred)
        bundle.L_pred = pred.item()
    if not terms:
        raise ValueError("every auxiliary term is ablated or zero-weighted; nothing to optimize")
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    bundle.L_CoDy = total.item()
    return total, bundle
