"""Warm-starting a specialist from the generalist on relabelled states."""

from dataclasses import dataclass

import numpy as np

from ..numerics import autodiff as ad
from ..numerics.distributions import DiagonalGaussian, gaussian_kl, gaussian_kl_np
from ..numerics.layers import get_arrays, set_arrays
from ..numerics.optim import Adam


class NoMatchingGraphError(LookupError):
    """No stored experience shares the target's graph; synthetic states would be needed."""


@dataclass
class ImaginedDataset:
    """States (and their recorded actions) from same-graph buffers, paired with a new design."""

    graph: object
    design: object
    states: np.ndarray
    actions: np.ndarray

    def __len__(self):
        return self.states.shape[0]

    def split(self, holdout, rng):
        """Random ``(train, held_out)`` partition with ``holdout`` rows held out."""
        order = rng.permutation(len(self))
        test, train = order[:holdout], order[holdout:]
        return (
            ImaginedDataset(self.graph, self.design, self.states[train], self.actions[train]),
            ImaginedDataset(self.graph, self.design, self.states[test], self.actions[test]),
        )


def relabel_states(buffer_set, target_graph, target_design, count, rng):
    """Draw ``count`` stored (state, action) pairs whose graph matches ``target_graph``.

    Sampling is uniform over all matching transitions, without replacement
    when enough exist. The states are returned unchanged; only the design
    they are paired with differs.
    """
    sources = [b for b in buffer_set.matching_graph(target_graph.morphology_id) if len(b) > 0]
    if not sources:
        raise NoMatchingGraphError(
            f"no stored experience for graph {target_graph.morphology_id}; "
            "a synthetic state generator would be required"
        )
    states = np.vstack([b.transitions().s for b in sources])
    actions = np.vstack([b.transitions().a for b in sources])
    total = states.shape[0]
    idx = rng.choice(total, size=count, replace=count > total)
    return ImaginedDataset(target_graph, target_design, states[idx], actions[idx])


def _gnn_targets(gnn, dataset, idx):
    """Generalist policy moments and node-averaged min-twin Q on dataset rows ``idx``."""
    s = dataset.states[idx]
    a = dataset.actions[idx]
    g, d = dataset.graph, dataset.design
    dist = gnn.policy_for(g, d)(s)
    q1 = gnn.node_q_for(gnn.q1, g, d)(s, a).data
    q2 = gnn.node_q_for(gnn.q2, g, d)(s, a).data
    q = np.minimum(q1, q2).mean(axis=1, keepdims=True)
    return dist.mean.data, dist.log_std.data, q


def distillation_metrics(dataset, gnn, sac):
    """Mean ``KL(pi_MLP || pi_GNN)`` per action dimension and mean squared value gap."""
    idx = np.arange(len(dataset))
    mean_g, log_std_g, q_g = _gnn_targets(gnn, dataset, idx)
    out = sac.actor.forward_np(dataset.states)
    n = sac.act_dim
    mean_m, log_std_m = out[:, :n], np.clip(out[:, n:], -20.0, 2.0)
    kl = gaussian_kl_np(mean_m, log_std_m, mean_g, log_std_g)
    sa = np.hstack([dataset.states, dataset.actions])
    gaps = [np.mean((net.forward_np(sa) - q_g) ** 2) for net in (sac.q1, sac.q2)]
    return float(np.mean(kl) / n), float(np.mean(gaps))


def pretrain_specialist(dataset, gnn, sac, iterations, rng, batch_size=256, lr=5e-4):
    """Fit the specialist's actor and both critics to the frozen generalist.

    Actor: minimise ``KL(pi_MLP(.|s) || pi_GNN(.|s, xi, G))`` on pre-squash
    Gaussians. Critics: regress onto the generalist's node-averaged value.
    Target critics are synchronised afterwards and the specialist's
    temperature becomes ``alpha_GNN / N``. The generalist is only read.
    Returns per-iteration ``(kl, value)`` losses.
    """
    n = sac.act_dim
    actor_opt = Adam(sac.actor.params(), lr=lr)
    critic_opt = Adam(sac.q1.params() + sac.q2.params(), lr=lr)
    history = []
    for _ in range(iterations):
        idx = rng.integers(0, len(dataset), batch_size)
        mean_g, log_std_g, q_g = _gnn_targets(gnn, dataset, idx)
        s = dataset.states[idx]
        teacher = DiagonalGaussian(ad.Tensor(mean_g), ad.Tensor(log_std_g))
        with ad.Tape() as tape:
            student = sac.policy(s)
            kl = ad.mean(gaussian_kl(student, teacher))
        actor_opt.step(tape.gradient(kl, actor_opt.params))

        sa = np.hstack([s, dataset.actions[idx]])
        with ad.Tape() as tape:
            value = ad.mean(ad.square(sac.q1(sa) - q_g)) + ad.mean(ad.square(sac.q2(sa) - q_g))
        critic_opt.step(tape.gradient(value, critic_opt.params))
        history.append((kl.item(), value.item()))

    set_arrays(sac.q1_target.params(), get_arrays(sac.q1.params()))
    set_arrays(sac.q2_target.params(), get_arrays(sac.q2.params()))
    sac.alpha = gnn.config.alpha / n
    return history
