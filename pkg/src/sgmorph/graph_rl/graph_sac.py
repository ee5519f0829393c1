"""Soft actor-critic with graph-network actor and per-node twin critics.

A multi-batch is a list of :class:`GraphBatch`, one per replay buffer. Every
transition contributes one row per node; per-node terms are averaged over
nodes, then transitions, then graph-batches, so each graph-batch carries
equal weight whatever its size.
"""

from dataclasses import dataclass

import numpy as np

from ..numerics import autodiff as ad
from ..numerics.distributions import DiagonalGaussian
from ..numerics.layers import get_arrays, set_arrays, soft_update
from ..numerics.optim import Adam
from ..rl.sac import sample_action
from .gnn import (
    GnnConfig,
    GraphNetwork,
    NodeLayout,
    design_features,
    graph_layout,
    node_average,
    node_features,
    node_input_dim,
)

SNAPSHOT_VERSION = 1


@dataclass
class GraphBatch:
    graph: object
    design: object
    batch: object


@dataclass
class _Assembled:
    layout: NodeLayout
    x: np.ndarray
    x2: np.ndarray
    a: np.ndarray
    r: np.ndarray
    done: np.ndarray
    weight: np.ndarray


def _assemble(multi_batch):
    layouts, xs, x2s, acts, rs, dones, weights = [], [], [], [], [], [], []
    g_count = len(multi_batch)
    for gb in multi_batch:
        n = gb.graph.n_nodes
        b = len(gb.batch)
        feats = design_features(gb.design)
        layouts.append(graph_layout(gb.graph, b))
        xs.append(node_features(gb.batch.s, feats))
        x2s.append(node_features(gb.batch.s2, feats))
        acts.append(np.asarray(gb.batch.a).reshape(b * n, 1))
        rs.append(np.repeat(gb.batch.r, n, axis=0))
        dones.append(np.repeat(gb.batch.done, n, axis=0))
        weights.append(np.full((b * n, 1), 1.0 / (g_count * b * n)))
    return _Assembled(
        NodeLayout.union(layouts),
        np.vstack(xs),
        np.vstack(x2s),
        np.vstack(acts),
        np.vstack(rs),
        np.vstack(dones),
        np.vstack(weights),
    )


def _row_noise(noises):
    return np.vstack([np.asarray(z, dtype=np.float64).reshape(-1, 1) for z in noises])


class GnnSac:
    """Generalist actor, twin critics and targets shared across morphologies."""

    def __init__(self, per_node_design, rng, config=GnnConfig()):
        self.config = config
        self.per_node = per_node_design
        d = node_input_dim(per_node_design)
        self.actor = GraphNetwork(d, 2, config, rng)
        self.q1 = GraphNetwork(d + 1, 1, config, rng)
        self.q2 = GraphNetwork(d + 1, 1, config, rng)
        self.q1_target = GraphNetwork(d + 1, 1, config, rng)
        self.q2_target = GraphNetwork(d + 1, 1, config, rng)
        set_arrays(self.q1_target.params(), get_arrays(self.q1.params()))
        set_arrays(self.q2_target.params(), get_arrays(self.q2.params()))
        self.actor_optim = Adam(self.actor.params(), lr=config.lr)
        self.critic_optim = Adam(self.q1.params() + self.q2.params(), lr=config.lr)

    # per-row views -----------------------------------------------------------

    def policy_rows(self, x, layout):
        out = self.actor(x, layout)
        return DiagonalGaussian.from_head(ad.columns(out, 0, 1), ad.columns(out, 1, 2))

    @staticmethod
    def critic_rows(net):
        return lambda x, a, layout: net(ad.concat([ad.as_tensor(x), ad.as_tensor(a)], axis=1), layout)

    @property
    def critics(self):
        return (self.critic_rows(self.q1), self.critic_rows(self.q2))

    @property
    def target_critics(self):
        return (self.critic_rows(self.q1_target), self.critic_rows(self.q2_target))

    def networks(self):
        return {
            "actor": self.actor,
            "q1": self.q1,
            "q2": self.q2,
            "q1_target": self.q1_target,
            "q2_target": self.q2_target,
        }

    # single-morphology views --------------------------------------------------

    def policy_for(self, graph, design):
        """``policy(s) -> DiagonalGaussian`` over the ``N`` actions of one morphology."""
        feats = design_features(design)
        n = graph.n_nodes

        def policy(s):
            s = np.atleast_2d(np.asarray(s, dtype=np.float64))
            b = s.shape[0]
            dist = self.policy_rows(node_features(s, feats), graph_layout(graph, b))
            return DiagonalGaussian(ad.reshape(dist.mean, b, n), ad.reshape(dist.log_std, b, n))

        return policy

    def node_q_for(self, net, graph, design):
        """``q(s, a) -> (B, N)`` per-node values of one critic network."""
        feats = design_features(design)
        n = graph.n_nodes

        def q(s, a):
            s = np.atleast_2d(np.asarray(s, dtype=np.float64))
            b = s.shape[0]
            a_rows = ad.reshape(ad.as_tensor(a), b * n, 1)
            out = self.critic_rows(net)(node_features(s, feats), a_rows, graph_layout(graph, b))
            return ad.reshape(out, b, n)

        return q

    def act(self, graph, design, obs, deterministic=False, rng=None):
        obs = np.asarray(obs, dtype=np.float64)
        single = obs.ndim == 1
        dist = self.policy_for(graph, design)(obs)
        u = dist.mean.data
        if not deterministic:
            if rng is None:
                raise ValueError("stochastic acting needs an rng")
            u = u + np.exp(dist.log_std.data) * rng.standard_normal(u.shape)
        a = np.tanh(u)
        return a[0] if single else a

    # training -----------------------------------------------------------------

    def train_step(self, multi_batch, rng):
        asm = _assemble(multi_batch)
        cfg = self.config
        noise = [rng.standard_normal((len(gb.batch), gb.graph.n_nodes)) for gb in multi_batch]
        with ad.Tape() as tape:
            loss_q = _critic_loss(asm, self, cfg.alpha, cfg.gamma, _row_noise(noise))
        self.critic_optim.step(tape.gradient(loss_q, self.critic_optim.params))

        noise = [rng.standard_normal((len(gb.batch), gb.graph.n_nodes)) for gb in multi_batch]
        with ad.Tape() as tape:
            loss_pi = _actor_loss(asm, self, cfg.alpha, _row_noise(noise))
        self.actor_optim.step(tape.gradient(loss_pi, self.actor_optim.params))

        soft_update(self.q1_target.params(), self.q1.params(), cfg.tau)
        soft_update(self.q2_target.params(), self.q2.params(), cfg.tau)
        return loss_q.item(), loss_pi.item()

    # snapshots ----------------------------------------------------------------

    def save(self, path):
        arrays = {"version": np.array(SNAPSHOT_VERSION), "per_node": np.array(self.per_node)}
        cfg = self.config
        arrays["config"] = np.array(
            [cfg.hidden_size, cfg.message_size, cfg.rounds, *cfg.hidden_layers], dtype=np.int64
        )
        for name, net in self.networks().items():
            for k, a in enumerate(net.arrays()):
                arrays[f"{name}/{k}"] = a
        np.savez(path, **arrays)

    def load(self, path):
        """Load parameters saved by :meth:`save`; shapes and layout must match."""
        with np.load(path, allow_pickle=False) as z:
            if int(z["version"]) != SNAPSHOT_VERSION:
                raise ValueError(f"unsupported network snapshot version {int(z['version'])}")
            if int(z["per_node"]) != self.per_node:
                raise ValueError("snapshot was saved for a different design width")
            for name, net in self.networks().items():
                count = len(net.params())
                net.load_arrays([z[f"{name}/{k}"] for k in range(count)])

    @classmethod
    def from_snapshot(cls, path, config_overrides=None):
        with np.load(path, allow_pickle=False) as z:
            c = [int(v) for v in z["config"]]
            per_node = int(z["per_node"])
        cfg = GnnConfig(hidden_size=c[0], message_size=c[1], rounds=c[2], hidden_layers=tuple(c[3:]))
        if config_overrides:
            cfg = GnnConfig(**{**cfg.__dict__, **config_overrides})
        gnn = cls(per_node, np.random.default_rng(0), cfg)
        gnn.load(path)
        return gnn


def _critic_loss(asm, gnn, alpha, gamma, noise):
    lay = asm.layout
    dist2 = gnn.policy_rows(asm.x2, lay)
    a2, logp2 = sample_action(dist2, noise)
    t1, t2 = gnn.target_critics
    q_next = ad.minimum(t1(asm.x2, a2, lay), t2(asm.x2, a2, lay))
    soft_value = node_average(q_next, lay) - alpha * logp2
    target = ad.stop_gradient(asm.r + gamma * (1.0 - asm.done) * soft_value)
    loss = None
    for critic in gnn.critics:
        err = critic(asm.x, asm.a, lay) - target
        term = ad.sum(asm.weight * (0.5 * ad.square(err)))
        loss = term if loss is None else loss + term
    return loss


def _actor_loss(asm, gnn, alpha, noise):
    lay = asm.layout
    action, logp = sample_action(gnn.policy_rows(asm.x, lay), noise)
    c1, c2 = gnn.critics
    q = ad.minimum(c1(asm.x, action, lay), c2(asm.x, action, lay))
    return ad.sum(asm.weight * (alpha * logp - node_average(q, lay)))


def graph_sac_critic_loss(multi_batch, gnn, alpha, gamma, noises):
    """Per-node soft TD loss, summed over the twin critics.

    For node ``i`` the target is
    ``r + gamma * (1 - done) * (mean_j min_k Qhat_k^j(s', a') - alpha * log pi^i(a'^i | s'))``.
    ``noises`` holds one ``(B, N)`` standard-normal array per graph-batch.
    """
    return _critic_loss(_assemble(multi_batch), gnn, alpha, gamma, _row_noise(noises))


def graph_sac_actor_loss(multi_batch, gnn, alpha, noises):
    """Per-node ``alpha * log pi^i(a^i | s) - mean_j min_k Q_k^j(s, a)``, averaged."""
    return _actor_loss(_assemble(multi_batch), gnn, alpha, _row_noise(noises))


def sample_multi_batch(buffer_set, current_key, rng, batch_per_graph, graphs_per_batch):
    """The current buffer plus up to ``graphs_per_batch - 1`` other non-empty buffers chosen uniformly."""
    others = [k for k in buffer_set.keys() if k != current_key and len(buffer_set[k]) > 0]
    picks = []
    if current_key is not None and current_key in buffer_set and len(buffer_set[current_key]) > 0:
        picks.append(current_key)
    want = graphs_per_batch - len(picks)
    if others and want > 0:
        chosen = rng.choice(len(others), size=min(want, len(others)), replace=False)
        picks += [others[k] for k in sorted(chosen)]
    if not picks:
        raise ValueError("no non-empty buffers to train on")
    out = []
    for key in picks:
        buf = buffer_set[key]
        out.append(GraphBatch(buf.graph, buf.design, buf.sample(batch_per_graph, rng)))
    return out


def gnn_train_iterations(buffer_set, gnn, iterations, rng, current_key=None):
    cfg = gnn.config
    q_total = pi_total = 0.0
    for _ in range(iterations):
        mb = sample_multi_batch(buffer_set, current_key, rng, cfg.batch_per_graph, cfg.graphs_per_batch)
        lq, lpi = gnn.train_step(mb, rng)
        q_total += lq
        pi_total += lpi
    n = max(iterations, 1)
    return q_total / n, pi_total / n
