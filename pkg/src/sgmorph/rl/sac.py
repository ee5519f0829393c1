"""Soft actor-critic for one fixed morphology (the specialist learner).

The loss functions take callables rather than concrete networks:

* ``policy(s) -> DiagonalGaussian`` over pre-squash actions,
* ``critic(s, a) -> Tensor`` of shape ``(B, 1)``.

Noise for the reparameterised draws is passed in explicitly, which keeps the
losses pure functions of their arguments.
"""

from dataclasses import dataclass

import numpy as np

from ..numerics import autodiff as ad
from ..numerics.distributions import DiagonalGaussian, gaussian_sample_reparam, tanh_gaussian_logprob
from ..numerics.layers import Mlp, get_arrays, set_arrays, soft_update
from ..numerics.optim import Adam


def sample_action(dist, noise):
    """Reparameterised squashed action and its log-density, both ``(B, ·)``."""
    u = gaussian_sample_reparam(dist, noise)
    return ad.tanh(u), tanh_gaussian_logprob(dist, u)


def sac_critic_loss(batch, policy, critics, target_critics, alpha, gamma, noise):
    """Sum over the twin critics of ``0.5 * mean((Q - y)^2)``.

    ``y = r + gamma * (1 - done) * (min target Q(s', a') - alpha * log pi(a'|s'))``
    with ``a' ~ pi(.|s')`` and no gradient through ``y``.
    """
    next_action, next_logp = sample_action(policy(batch.s2), noise)
    q_next = ad.minimum(target_critics[0](batch.s2, next_action), target_critics[1](batch.s2, next_action))
    soft_value = q_next - alpha * next_logp
    target = ad.stop_gradient(batch.r + gamma * (1.0 - batch.done) * soft_value)
    loss = None
    for critic in critics:
        err = critic(batch.s, batch.a) - target
        term = 0.5 * ad.mean(ad.square(err))
        loss = term if loss is None else loss + term
    return loss


def sac_actor_loss(batch, policy, critics, alpha, noise):
    """``mean(alpha * log pi(a|s) - min(Q1, Q2)(s, a))`` with ``a ~ pi(.|s)`` reparameterised."""
    action, logp = sample_action(policy(batch.s), noise)
    q = ad.minimum(critics[0](batch.s, action), critics[1](batch.s, action))
    return ad.mean(alpha * logp - q)


def mlp_alpha(n_actions, base=0.01):
    return base / n_actions


@dataclass(frozen=True)
class SacConfig:
    hidden: tuple = (200, 200, 200)
    lr: float = 1e-3
    gamma: float = 0.975
    tau: float = 0.01
    batch_size: int = 256
    alpha_base: float = 0.01


class MlpSac:
    """Actor, twin critics and their targets for one (graph, design)."""

    def __init__(self, obs_dim, act_dim, rng, config=SacConfig(), alpha=None):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.config = config
        self.alpha = mlp_alpha(act_dim, config.alpha_base) if alpha is None else alpha
        h = config.hidden
        self.actor = Mlp(obs_dim, h, 2 * act_dim, rng)
        self.q1 = Mlp(obs_dim + act_dim, h, 1, rng)
        self.q2 = Mlp(obs_dim + act_dim, h, 1, rng)
        self.q1_target = Mlp(obs_dim + act_dim, h, 1, rng)
        self.q2_target = Mlp(obs_dim + act_dim, h, 1, rng)
        set_arrays(self.q1_target.params(), get_arrays(self.q1.params()))
        set_arrays(self.q2_target.params(), get_arrays(self.q2.params()))
        self.actor_optim = Adam(self.actor.params(), lr=config.lr)
        self.critic_optim = Adam(self.q1.params() + self.q2.params(), lr=config.lr)

    def policy(self, s):
        out = self.actor(s)
        n = self.act_dim
        return DiagonalGaussian.from_head(ad.columns(out, 0, n), ad.columns(out, n, 2 * n))

    @staticmethod
    def critic_fn(net):
        return lambda s, a: net(ad.concat([ad.as_tensor(s), ad.as_tensor(a)], axis=1))

    @property
    def critics(self):
        return (self.critic_fn(self.q1), self.critic_fn(self.q2))

    @property
    def target_critics(self):
        return (self.critic_fn(self.q1_target), self.critic_fn(self.q2_target))

    def train_step(self, batch, rng):
        cfg = self.config
        noise = rng.standard_normal((len(batch), self.act_dim))
        with ad.Tape() as tape:
            loss_q = sac_critic_loss(batch, self.policy, self.critics, self.target_critics, self.alpha, cfg.gamma, noise)
        self.critic_optim.step(tape.gradient(loss_q, self.critic_optim.params))

        noise = rng.standard_normal((len(batch), self.act_dim))
        with ad.Tape() as tape:
            loss_pi = sac_actor_loss(batch, self.policy, self.critics, self.alpha, noise)
        self.actor_optim.step(tape.gradient(loss_pi, self.actor_optim.params))

        soft_update(self.q1_target.params(), self.q1.params(), cfg.tau)
        soft_update(self.q2_target.params(), self.q2.params(), cfg.tau)
        return loss_q.item(), loss_pi.item()

    def act(self, obs, deterministic=False, rng=None):
        """Squashed action in ``[-1, 1]^N`` for one observation or a batch."""
        obs = np.asarray(obs, dtype=np.float64)
        single = obs.ndim == 1
        out = self.actor.forward_np(obs.reshape(1, -1) if single else obs)
        n = self.act_dim
        mean = out[:, :n]
        if deterministic:
            u = mean
        else:
            if rng is None:
                raise ValueError("stochastic acting needs an rng")
            log_std = np.clip(out[:, n:], -20.0, 2.0)
            u = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
        a = np.tanh(u)
        return a[0] if single else a

    def networks(self):
        return {
            "actor": self.actor,
            "q1": self.q1,
            "q2": self.q2,
            "q1_target": self.q1_target,
            "q2_target": self.q2_target,
        }

    def state_arrays(self):
        return {name: get_arrays(net.params()) for name, net in self.networks().items()}

    def load_state_arrays(self, state):
        for name, net in self.networks().items():
            set_arrays(net.params(), state[name])


def mlp_train_iterations(buffer, sac, iterations, rng, batch_size=None):
    """Run ``iterations`` SAC updates on batches drawn from ``buffer``.

    Returns the mean critic and actor losses.
    """
    batch_size = batch_size or sac.config.batch_size
    q_total = pi_total = 0.0
    for _ in range(iterations):
        lq, lpi = sac.train_step(buffer.sample(batch_size, rng), rng)
        q_total += lq
        pi_total += lpi
    n = max(iterations, 1)
    return q_total / n, pi_total / n
