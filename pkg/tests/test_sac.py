import numpy as np
import pytest
import torch
import torch.nn as nn

from cody.agent import CodyAgent
from cody.nets import Actor, Critic
from cody.sac import Temperature, actor_loss, bootstrap, critic_loss, target_value, temperature_loss

from conftest import tiny_config
from test_losses import _tiny_batch


class FixedActor(nn.Module):
    """Returns preset actions and log-probs regardless of the input."""

    def __init__(self, action, log_prob):
        super().__init__()
        self.action, self.log_prob = action, log_prob

    def forward(self, z, generator=None, deterministic=False):
        return self.action, self.log_prob, self.action


class FixedCritic(nn.Module):
    def __init__(self, q1, q2):
        super().__init__()
        self.q1, self.q2 = q1, q2

    def forward(self, z, a):
        return self.q1, self.q2


def test_bootstrap_hand_row():
    t = bootstrap(reward=1.0, done=0.0, min_q=2.0, log_prob=-3.0, temperature=0.1, discount=0.99)
    assert abs(t - 3.277) < 1e-12


def test_target_value_hand_row_min_of_critics():
    actor = FixedActor(torch.zeros(1, 2), torch.tensor([-3.0]))
    critic = FixedCritic(torch.tensor([2.0]), torch.tensor([5.0]))
    t = target_value(torch.tensor([1.0]), torch.zeros(1, 4), torch.tensor([0.0]), actor, critic, 0.1, 0.99)
    assert abs(t.item() - 3.277) < 1e-6


def test_target_value_symmetric_in_critics():
    actor = FixedActor(torch.zeros(3, 2), torch.tensor([-1.0, 0.5, 2.0]))
    qa, qb = torch.tensor([1.0, -2.0, 3.0]), torch.tensor([0.5, 4.0, -1.0])
    args = (torch.ones(3), torch.zeros(3, 4), torch.zeros(3), actor)
    t1 = target_value(*args, FixedCritic(qa, qb), 0.2, 0.9)
    t2 = target_value(*args, FixedCritic(qb, qa), 0.2, 0.9)
    assert torch.equal(t1, t2)


@pytest.mark.parametrize("done,discount", [(1.0, 0.99), (0.0, 0.0)])
def test_target_value_reduces_to_reward(done, discount):
    actor, critic = Actor(4, 2, 8), Critic(4, 2, 8)
    r = torch.tensor([0.3, -1.7])
    t = target_value(r, torch.randn(2, 4), torch.full((2,), done), actor, critic, 0.1, discount)
    assert torch.equal(t, r)


def test_target_value_detached_and_finite():
    actor, critic = Actor(4, 2, 8), Critic(4, 2, 8)
    z = torch.randn(16, 4, requires_grad=True)
    t = target_value(torch.rand(16), z, torch.zeros(16), actor, critic, 0.1, 0.99)
    assert not t.requires_grad
    assert torch.isfinite(t).all()


def test_critic_loss_values():
    assert critic_loss(torch.tensor([1.5]), torch.tensor([1.5]), torch.tensor([1.5])).item() == 0.0
    assert critic_loss(torch.tensor([1.0]), torch.tensor([2.0]), torch.tensor([0.0])).item() == 5.0


def test_actor_loss_zero_temperature_constant_q():
    actor = Actor(4, 2, 8)
    critic = FixedCritic(torch.full((5,), 7.0), torch.full((5,), 9.0))
    loss, _ = actor_loss(torch.randn(5, 4), actor, critic, 0.0)
    assert loss.item() == -7.0


def test_actor_loss_detaches_embedding():
    z = torch.randn(5, 4, requires_grad=True)
    loss, _ = actor_loss(z, Actor(4, 2, 8), Critic(4, 2, 8), 0.1)
    loss.backward()
    assert z.grad is None


def test_bandit_policy_mean_converges_to_zero():
    """Q(a) = -a^2 is maximized at a = 0; the tanh mean must get there."""
    torch.manual_seed(0)
    actor = Actor(1, 1, 16)
    with torch.no_grad():
        actor.net[-1].bias[0] = 1.0  # start well away from the optimum

    class Quadratic(nn.Module):
        def forward(self, z, a):
            q = -(a**2).sum(-1)
            return q, q

    critic, z = Quadratic(), torch.ones(64, 1)
    opt = torch.optim.Adam(actor.parameters(), lr=1e-3)
    gen = torch.Generator().manual_seed(0)
    for _ in range(2000):
        loss, _ = actor_loss(z, actor, critic, 0.01, gen)
        opt.zero_grad()
        loss.backward()
        opt.step()
    _, _, mean_action = actor(z[:1], deterministic=True)
    assert abs(mean_action.item()) < 0.05


def test_temperature_initial_value_and_target():
    t = Temperature(0.1, 3)
    assert abs(t.value.item() - 0.1) < 1e-7
    assert t.target_entropy == -3.0


def test_temperature_stationary_at_target():
    t = Temperature(0.1, 2)
    log_probs = torch.full((8,), -t.target_entropy)
    temperature_loss(t, log_probs).backward()
    assert t.log_temperature.grad.item() == 0.0


def _temperature_after_step(log_prob_value: float) -> float:
    t = Temperature(0.1, 2)
    opt = torch.optim.Adam(t.parameters(), lr=1e-2)
    temperature_loss(t, torch.full((8,), log_prob_value)).backward()
    opt.step()
    return t.value.item()


def test_temperature_rises_when_entropy_below_target():
    # target entropy is -2; log_prob = 5 means entropy estimate -5 < -2
    assert _temperature_after_step(5.0) > 0.1


def test_temperature_falls_when_entropy_above_target():
    # log_prob = -1 means entropy estimate 1 > -2
    assert _temperature_after_step(-1.0) < 0.1


def test_temperature_log_probs_detached():
    t = Temperature(0.1, 1)
    lp = torch.zeros(4, requires_grad=True)
    temperature_loss(t, lp).backward()
    assert lp.grad is None


# -- gradient routing through the agent ---------------------------------------


@pytest.fixture
def agent():
    return CodyAgent((9, 16, 16), 2, tiny_config())


def _encoder_grads(agent, loss):
    params = list(agent.encoder.parameters())
    return torch.autograd.grad(loss, params, allow_unused=True)


def test_routing_critic_reaches_encoder(agent):
    grads = _encoder_grads(agent, agent.critic_objective(_tiny_batch(agent)))
    conv = grads[0]
    assert conv is not None and conv.abs().sum() > 0


def test_routing_actor_blocked_from_encoder(agent):
    loss, _ = agent.actor_objective(_tiny_batch(agent))
    grads = _encoder_grads(agent, loss)
    assert all(g is None or torch.count_nonzero(g) == 0 for g in grads)


def test_routing_cody_reaches_encoder(agent):
    loss, _ = agent.cody_objective(_tiny_batch(agent))
    grads = _encoder_grads(agent, loss)
    assert grads[0] is not None and grads[0].abs().sum() > 0


@pytest.mark.parametrize("objective", ["critic", "actor", "cody"])
def test_routing_never_into_targets(agent, objective):
    targets = [p for m in agent.target_modules() for p in m.parameters()]
    for p in targets:
        p.requires_grad_(True)
    tb = _tiny_batch(agent)
    if objective == "critic":
        loss = agent.critic_objective(tb)
    elif objective == "actor":
        loss, _ = agent.actor_objective(tb)
    else:
        loss, _ = agent.cody_objective(tb)
    grads = torch.autograd.grad(loss, targets, allow_unused=True)
    assert all(g is None for g in grads)


def test_critic_target_update_frequency(agent):
    trace: list[str] = []
    for i in range(10):
        agent.update(_tiny_batch(agent, seed=i), trace=trace)
    assert trace.count("critic_target_ema") == 5
    assert trace.count("encoder_target_ema") == 10


def test_critic_target_copy_with_tau_one():
    agent = CodyAgent((9, 16, 16), 2, tiny_config(q_ema=1.0, critic_target_update_freq=1))
    agent.update(_tiny_batch(agent))
    for pt, po in zip(agent.critic_target.parameters(), agent.critic.parameters()):
        assert torch.equal(pt, po)


def test_q_targets_finite(rng):
    actor, critic = Actor(6, 2, 16), Critic(6, 2, 16)
    for _ in range(20):
        z = torch.tensor(rng.normal(0, 10, size=(32, 6)), dtype=torch.float32)
        r = torch.tensor(rng.normal(0, 100, size=32), dtype=torch.float32)
        assert torch.isfinite(target_value(r, z, torch.zeros(32), actor, critic, 0.1, 0.99)).all()
