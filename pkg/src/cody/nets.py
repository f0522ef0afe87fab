"""Encoders, transition model, SAC heads and the EMA link between online and
target copies."""

from __future__ import annotations

import copy
import math
from typing import Iterable

import torch
import torch.nn as nn
import torch.nn.functional as F

LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0


def orthogonal_init(module: nn.Module) -> None:
    if isinstance(module, (nn.Linear, nn.Conv2d)):
        nn.init.orthogonal_(module.weight)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def mlp(in_dim: int, hidden_dim: int, out_dim: int, num_layers: int) -> nn.Sequential:
    """``num_layers`` fully connected layers with ReLU between them."""
    dims = [in_dim] + [hidden_dim] * (num_layers - 1) + [out_dim]
    layers: list[nn.Module] = []
    for i in range(num_layers):
        layers.append(nn.Linear(dims[i], dims[i + 1]))
        if i < num_layers - 1:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


def pixels_to_float(obs) -> torch.Tensor:
    """uint8 pixels (numpy or tensor) -> float32 tensor in [0, 1]."""
    t = torch.as_tensor(obs)
    return t.float() / 255.0


class StateEncoder(nn.Module):
    """Conv stack (3x3 kernels, stride 1, ReLU) -> linear -> LayerNorm."""

    def __init__(
        self,
        obs_shape: tuple[int, int, int],
        feature_dim: int = 50,
        num_layers: int = 4,
        num_filters: int = 32,
        layer_norm: bool = True,
    ):
        super().__init__()
        channels, height, width = obs_shape
        convs: list[nn.Module] = []
        in_ch = channels
        for _ in range(num_layers):
            convs += [nn.Conv2d(in_ch, num_filters, kernel_size=3, stride=1), nn.ReLU()]
            in_ch = num_filters
        self.convs = nn.Sequential(*convs)
        out_h, out_w = height - 2 * num_layers, width - 2 * num_layers
        if out_h < 1 or out_w < 1:
            raise ValueError(f"image {height}x{width} too small for {num_layers} conv layers")
        self.fc = nn.Linear(num_filters * out_h * out_w, feature_dim)
        self.norm = nn.LayerNorm(feature_dim) if layer_norm else nn.Identity()
        self.obs_shape = tuple(obs_shape)
        self.feature_dim = feature_dim
        self.apply(orthogonal_init)

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        h = self.convs(obs).flatten(1)
        z = self.norm(self.fc(h))
        if not torch.isfinite(z).all():
            raise FloatingPointError("state encoder produced non-finite activations")
        return z


class ActionEncoder(nn.Module):
    def __init__(self, action_dim: int, hidden_dim: int = 512, out_dim: int = 16):
        super().__init__()
        self.net = mlp(action_dim, hidden_dim, out_dim, num_layers=2)
        self.out_dim = out_dim
        self.apply(orthogonal_init)

    def forward(self, action: torch.Tensor) -> torch.Tensor:
        return self.net(action)


class TransitionModel(nn.Module):
    """Predicts the next state embedding from concat(z, c)."""

    def __init__(self, feature_dim: int = 50, action_embed_dim: int = 16, hidden_dim: int = 1024):
        super().__init__()
        self.net = mlp(feature_dim + action_embed_dim, hidden_dim, feature_dim, num_layers=3)
        self.apply(orthogonal_init)

    def forward(self, z: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([z, c], dim=-1))


class QFunction(nn.Module):
    def __init__(self, feature_dim: int, action_dim: int, hidden_dim: int = 1024):
        super().__init__()
        self.net = mlp(feature_dim + action_dim, hidden_dim, 1, num_layers=3)

    def forward(self, z: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([z, action], dim=-1)).squeeze(-1)


class Critic(nn.Module):
    """Twin Q-functions on top of state embeddings."""

    def __init__(self, feature_dim: int, action_dim: int, hidden_dim: int = 1024):
        super().__init__()
        self.q1 = QFunction(feature_dim, action_dim, hidden_dim)
        self.q2 = QFunction(feature_dim, action_dim, hidden_dim)
        self.apply(orthogonal_init)

    def forward(self, z: torch.Tensor, action: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return self.q1(z, action), self.q2(z, action)


class Actor(nn.Module):
    """Diagonal Gaussian policy squashed by tanh."""

    def __init__(self, feature_dim: int, action_dim: int, hidden_dim: int = 1024):
        super().__init__()
        self.net = mlp(feature_dim, hidden_dim, 2 * action_dim, num_layers=3)
        self.action_dim = action_dim
        self.apply(orthogonal_init)

    def distribution_params(self, z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        mean, log_std = self.net(z).chunk(2, dim=-1)
        return mean, log_std.clamp(LOG_STD_MIN, LOG_STD_MAX)

    def forward(
        self,
        z: torch.Tensor,
        generator: torch.Generator | None = None,
        deterministic: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (action, log_prob, mean_action)."""
        mean, log_std = self.distribution_params(z)
        return squashed_gaussian_sample(mean, log_std, generator, deterministic)


def squashed_gaussian_sample(mean, log_std, generator=None, deterministic=False):
    """Reparameterized tanh-Gaussian sample with change-of-variables log-prob."""
    std = log_std.exp()
    if deterministic:
        u = mean
    else:
        eps = torch.randn(mean.shape, generator=generator, dtype=mean.dtype, device=mean.device)
        u = mean + std * eps
    log_prob = squashed_gaussian_log_prob(u, mean, log_std)
    return torch.tanh(u), log_prob, torch.tanh(mean)


def squashed_gaussian_log_prob(u, mean, log_std) -> torch.Tensor:
    """log density of tanh(u) for u ~ N(mean, exp(log_std)^2), summed over dims."""
    gauss = -0.5 * ((u - mean) / log_std.exp()) ** 2 - log_std - 0.5 * math.log(2 * math.pi)
    # log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u))
    log_det = 2.0 * (math.log(2.0) - u - F.softplus(-2.0 * u))
    return (gauss - log_det).sum(dim=-1)


class ScoreWeights(nn.Module):
    """Bilinear classifier matrices: W1 (d+n, d) temporal, W2 (d, d) multi-view."""

    def __init__(self, feature_dim: int = 50, action_embed_dim: int = 16):
        super().__init__()
        self.W1 = nn.Parameter(torch.empty(feature_dim + action_embed_dim, feature_dim))
        self.W2 = nn.Parameter(torch.empty(feature_dim, feature_dim))
        nn.init.orthogonal_(self.W1)
        nn.init.orthogonal_(self.W2)


def _as_tensors(params) -> list[tuple[str, torch.Tensor]]:
    if isinstance(params, nn.Module):
        return list(params.named_parameters()) + list(params.named_buffers())
    return [(str(i), p) for i, p in enumerate(params)]


@torch.no_grad()
def ema_update(target, online, tau: float) -> None:
    """In place ``p_t <- tau * p_o + (1 - tau) * p_t`` for every tensor pair.

    ``target`` and ``online`` are modules or sequences of tensors with
    identical structure.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    t_items, o_items = _as_tensors(target), _as_tensors(online)
    if len(t_items) != len(o_items):
        raise ValueError("EMA structure mismatch: different number of tensors")
    for (tn, pt), (on, po) in zip(t_items, o_items):
        if tn != on or pt.shape != po.shape:
            raise ValueError(f"EMA structure mismatch at {tn!r} vs {on!r}")
        if not pt.dtype.is_floating_point:
            pt.copy_(po)
            continue
        pt.mul_(1.0 - tau).add_(po, alpha=tau)


def make_target(online: nn.Module) -> nn.Module:
    """Deep copy of ``online`` excluded from gradient computation."""
    target = copy.deepcopy(online)
    for p in target.parameters():
        p.requires_grad_(False)
    return target


def parameters_of(*modules: nn.Module) -> Iterable[nn.Parameter]:
    for m in modules:
        yield from m.parameters()
