"""SAC agent with the auxiliary representation model attached.

Parameter groups and their optimizers:

* critic: twin Q-functions + online state encoder (lr_critic)
* actor: policy head only (lr_actor)
* temperature: log temperature (lr_temperature)
* representation: online encoder, action encoder, online transition model
  and both bilinear classifier matrices (lr_encoder)

The online encoder thus gets two Adam updates per step, one through the
Bellman error and one through the auxiliary loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from cody import augment
from cody.config import TrainConfig
from cody.losses import CodyBatchOutputs, LossBundle, LossWeights, total_loss
from cody.nets import (
    ActionEncoder,
    Actor,
    Critic,
    ScoreWeights,
    StateEncoder,
    TransitionModel,
    ema_update,
    make_target,
    parameters_of,
    pixels_to_float,
)
from cody.replay import Batch
from cody.sac import Temperature, actor_loss, critic_loss, target_value, temperature_loss

PHASES = ("critic", "actor", "temperature", "cody", "critic_target_ema", "encoder_target_ema")


class NonFiniteLossError(FloatingPointError):
    def __init__(self, phase: str, bundle: LossBundle):
        super().__init__(f"non-finite loss in phase {phase!r}: {bundle.as_dict()}")
        self.phase = phase
        self.bundle = bundle


@dataclass
class TensorBatch:
    """A sampled minibatch after augmentation and float conversion."""

    obs1: torch.Tensor  # view 1 of s_t
    obs2: torch.Tensor  # view 2 of s_t
    next_obs: torch.Tensor  # singly shifted s_{t+1}
    action: torch.Tensor
    reward: torch.Tensor
    done: torch.Tensor
    z_next: torch.Tensor | None = None  # target embedding of next_obs, filled lazily

    def target_next(self, encoder_target) -> torch.Tensor:
        if self.z_next is None:
            with torch.no_grad():
                self.z_next = encoder_target(self.next_obs)
        return self.z_next


def prepare_batch(batch: Batch, rng: np.random.Generator, max_shift: int) -> TensorBatch:
    view1, view2 = augment.two_views(batch.states, rng, max_shift)
    next_view = augment.random_shift(batch.next_states, rng, max_shift)
    return TensorBatch(
        obs1=pixels_to_float(view1),
        obs2=pixels_to_float(view2),
        next_obs=pixels_to_float(next_view),
        action=torch.as_tensor(batch.actions, dtype=torch.float32),
        reward=torch.as_tensor(batch.rewards, dtype=torch.float32),
        done=torch.as_tensor(batch.dones, dtype=torch.float32),
    )


class CodyAgent:
    def __init__(self, obs_shape: tuple[int, int, int], action_dim: int, config: TrainConfig, init_seed: int = 0):
        self.config = config
        self.obs_shape = tuple(obs_shape)
        self.action_dim = action_dim
        self.frozen = config.freeze_encoder
        self.cody_enabled = config.cody_enabled and not config.freeze_encoder
        self.weights = LossWeights(config.lam, config.eta, config.ablation)
        self.update_count = 0

        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(init_seed)
            self.encoder = StateEncoder(
                obs_shape,
                feature_dim=config.feature_dim,
                num_layers=config.num_conv_layers,
                num_filters=config.num_filters,
                layer_norm=config.embedding_norm == "layernorm",
            )
            self.action_encoder = ActionEncoder(action_dim, config.action_hidden_dim, config.action_embed_dim)
            self.transition = TransitionModel(config.feature_dim, config.action_embed_dim, config.transition_hidden_dim)
            self.scores = ScoreWeights(config.feature_dim, config.action_embed_dim)
            self.critic = Critic(config.feature_dim, action_dim, config.hidden_dim)
            self.actor = Actor(config.feature_dim, action_dim, config.hidden_dim)
        self.temperature = Temperature(config.init_temperature, action_dim)

        self.encoder_target = make_target(self.encoder)
        self.transition_target = make_target(self.transition)
        self.critic_target = make_target(self.critic)

        if self.frozen:
            for p in self.encoder.parameters():
                p.requires_grad_(False)
            critic_params = list(self.critic.parameters())
        else:
            critic_params = list(parameters_of(self.critic, self.encoder))
        self.critic_opt = torch.optim.Adam(critic_params, lr=config.lr_critic)
        self.actor_opt = torch.optim.Adam(self.actor.parameters(), lr=config.lr_actor)
        self.temperature_opt = torch.optim.Adam(self.temperature.parameters(), lr=config.lr_temperature)
        self.cody_opt = None
        if self.cody_enabled:
            self.cody_opt = torch.optim.Adam(
                parameters_of(self.encoder, self.action_encoder, self.transition, self.scores),
                lr=config.lr_encoder,
            )

    # -- module bookkeeping ------------------------------------------------

    def modules(self) -> dict[str, torch.nn.Module]:
        return {
            "encoder": self.encoder,
            "encoder_target": self.encoder_target,
            "action_encoder": self.action_encoder,
            "transition": self.transition,
            "transition_target": self.transition_target,
            "scores": self.scores,
            "critic": self.critic,
            "critic_target": self.critic_target,
            "actor": self.actor,
            "temperature": self.temperature,
        }

    def optimizers(self) -> dict[str, torch.optim.Optimizer]:
        opts = {"critic": self.critic_opt, "actor": self.actor_opt, "temperature": self.temperature_opt}
        if self.cody_opt is not None:
            opts["cody"] = self.cody_opt
        return opts

    def target_modules(self) -> list[torch.nn.Module]:
        return [self.encoder_target, self.transition_target, self.critic_target]

    def state_dict(self) -> dict:
        return {
            "modules": {k: m.state_dict() for k, m in self.modules().items()},
            "optimizers": {k: o.state_dict() for k, o in self.optimizers().items()},
            "update_count": self.update_count,
        }

    def load_state_dict(self, state: dict) -> None:
        for k, m in self.modules().items():
            m.load_state_dict(state["modules"][k])
        for k, o in self.optimizers().items():
            o.load_state_dict(state["optimizers"][k])
        self.update_count = state["update_count"]

    def load_encoder(self, encoder_state: dict) -> None:
        self.encoder.load_state_dict(encoder_state)
        self.encoder_target.load_state_dict(encoder_state)

    @property
    def alpha(self) -> torch.Tensor:
        return self.temperature.value.detach()

    # -- acting --------------------------------------------------------------

    @torch.no_grad()
    def act(self, obs: np.ndarray, deterministic: bool = False, generator: torch.Generator | None = None) -> np.ndarray:
        z = self.encoder(pixels_to_float(obs)[None])
        action, _, mean = self.actor(z, generator=generator, deterministic=deterministic)
        out = mean if deterministic else action
        return out[0].numpy().astype(np.float32)

    # -- objectives ----------------------------------------------------------

    def embed(self, obs: torch.Tensor) -> torch.Tensor:
        if self.frozen:
            with torch.no_grad():
                return self.encoder(obs)
        return self.encoder(obs)

    def critic_objective(self, tb: TensorBatch, generator=None) -> torch.Tensor:
        z_next = tb.target_next(self.encoder_target)
        target = target_value(
            tb.reward, z_next, tb.done, self.actor, self.critic_target, self.alpha, self.config.discount, generator
        )
        q1, q2 = self.critic(self.embed(tb.obs1), tb.action)
        return critic_loss(q1, q2, target)

    def actor_objective(self, tb: TensorBatch, generator=None, z: torch.Tensor | None = None):
        if z is None:
            z = self.embed(tb.obs1)
        return actor_loss(z, self.actor, self.critic, self.alpha, generator)

    def cody_outputs(self, tb: TensorBatch, z1: torch.Tensor | None = None) -> CodyBatchOutputs:
        if z1 is None:
            z1 = self.encoder(tb.obs1)
        c = self.action_encoder(tb.action)
        zhat1 = self.transition(z1, c)
        z_next = tb.target_next(self.encoder_target)
        with torch.no_grad():
            z2 = self.encoder_target(tb.obs2)
            zhat2 = self.transition_target(z2, c)
        return CodyBatchOutputs(z1=z1, z2=z2, c=c, z_next=z_next, zhat1=zhat1, zhat2=zhat2)

    def cody_objective(self, tb: TensorBatch, z1: torch.Tensor | None = None) -> tuple[torch.Tensor, LossBundle]:
        out = self.cody_outputs(tb, z1)
        return total_loss(out, self.scores.W1, self.scores.W2, self.weights)

    # -- one gradient step -------------------------------------------------

    def update(self, tb: TensorBatch, generator: torch.Generator | None = None, trace: list | None = None) -> LossBundle:
        cfg = self.config
        bundle = LossBundle()

        # 1) soft Q-functions; gradients also reach the online encoder
        lc = self.critic_objective(tb, generator)
        bundle.critic_loss = lc.item()
        self._check(lc, "critic", bundle)
        self.critic_opt.zero_grad(set_to_none=True)
        lc.backward()
        self.critic_opt.step()
        _log(trace, "critic")

        # one encoder pass after the critic step serves phases 2 and 4
        z1 = self.embed(tb.obs1) if self.cody_enabled else None

        # 2) policy on detached embeddings
        la, log_prob = self.actor_objective(tb, generator, z=z1)
        bundle.actor_loss = la.item()
        self._check(la, "actor", bundle)
        self.actor_opt.zero_grad(set_to_none=True)
        la.backward()
        self.actor_opt.step()
        _log(trace, "actor")

        # 3) temperature
        if cfg.learn_temperature:
            lt = temperature_loss(self.temperature, log_prob)
            self.temperature_opt.zero_grad(set_to_none=True)
            lt.backward()
            self.temperature_opt.step()
            _log(trace, "temperature")
        bundle.temperature = self.temperature.value.item()

        # 4) auxiliary representation loss
        if self.cody_enabled:
            lcody, aux = self.cody_objective(tb, z1)
            bundle.L_pred, bundle.L_TMI, bundle.L_MVMI, bundle.L_CoDy = aux.L_pred, aux.L_TMI, aux.L_MVMI, aux.L_CoDy
            self._check(lcody, "cody", bundle)
            self.cody_opt.zero_grad(set_to_none=True)
            lcody.backward()
            self.cody_opt.step()
            _log(trace, "cody")

        self.update_count += 1
        # 5) target critics every few steps
        if self.update_count % cfg.critic_target_update_freq == 0:
            ema_update(self.critic_target, self.critic, cfg.q_ema)
            _log(trace, "critic_target_ema")
        # 6) target encoder and transition model every step
        if not self.frozen:
            ema_update(self.encoder_target, self.encoder, cfg.encoder_ema)
            ema_update(self.transition_target, self.transition, cfg.encoder_ema)
            _log(trace, "encoder_target_ema")
        return bundle

    @staticmethod
    def _check(loss: torch.Tensor, phase: str, bundle: LossBundle) -> None:
        if not torch.isfinite(loss):
            raise NonFiniteLossError(phase, bundle)


def _log(trace: list | None, phase: str) -> None:
    if trace is not None:
        trace.append(phase)
