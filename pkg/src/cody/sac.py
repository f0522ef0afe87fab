"""Soft actor-critic objectives on top of state embeddings."""

from __future__ import annotations

import math

import torch
import torch.nn as nn

from cody.nets import Actor, Critic


class Temperature(nn.Module):
    """Entropy temperature stored in log space; target entropy is -|A|."""

    def __init__(self, init_temperature: float, action_dim: int):
        super().__init__()
        self.log_temperature = nn.Parameter(torch.tensor(math.log(init_temperature)))
        self.target_entropy = -float(action_dim)

    @property
    def value(self) -> torch.Tensor:
        return self.log_temperature.exp()


@torch.no_grad()
def target_value(
    reward: torch.Tensor,
    next_z: torch.Tensor,
    done: torch.Tensor,
    actor: Actor,
    target_critic: Critic,
    temperature: torch.Tensor | float,
    discount: float,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """``r + gamma (1 - d) (min_i Q_targ,i(z', a') - alpha log pi(a'|z'))``.

    ``a'`` is sampled fresh from the current policy; nothing here is
    differentiated.
    """
    next_action, next_log_prob, _ = actor(next_z, generator=generator)
    q1, q2 = target_critic(next_z, next_action)
    soft_v = torch.min(q1, q2) - temperature * next_log_prob
    return reward + discount * (1.0 - done) * soft_v


def bootstrap(reward, done, min_q, log_prob, temperature, discount):
    """Elementwise target formula, split out so it can be checked by hand."""
    return reward + discount * (1.0 - done) * (min_q - temperature * log_prob)


def critic_loss(q1: torch.Tensor, q2: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Sum over both critics of the mean squared Bellman error."""
    target = target.detach()
    return (q1 - target).pow(2).mean() + (q2 - target).pow(2).mean()


def actor_loss(
    z: torch.Tensor,
    actor: Actor,
    critic: Critic,
    temperature: torch.Tensor | float,
    generator: torch.Generator | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """``E[alpha log pi(a|z) - min_i Q_i(z, a)]`` with a reparameterized ``a``.

    The embedding is detached so the actor never shapes the encoder. Returns
    the loss and the (attached) log-probabilities of the sampled actions.
    """
    z = z.detach()
    action, log_prob, _ = actor(z, generator=generator)
    q1, q2 = critic(z, action)
    loss = (temperature * log_prob - torch.min(q1, q2)).mean()
    return loss, log_prob


def temperature_loss(temperature: Temperature, log_probs: torch.Tensor) -> torch.Tensor:
    """``E[-alpha (log pi + target_entropy)]``; lowers alpha when entropy is above target."""
    return (temperature.value * (-log_probs.detach() - temperature.target_entropy)).mean()
