"""Small graph-network fixtures shared by the graph-RL, design and acceptance tests."""

import numpy as np

from sgmorph.graph_rl import GnnConfig
from sgmorph.morphology import DesignSpace, MorphologyGraph, ParamSpec
from sgmorph.rl import Batch

TINY = GnnConfig(hidden_layers=(6,), hidden_size=5, message_size=4, batch_per_graph=8)
LENGTH = ParamSpec("length", 0.2, 0.6, "m")
ORIENT = ParamSpec("orientation", -1.0, 1.0, "rad")


def single_node_graph():
    return MorphologyGraph((None,), (0.0,), (0.0,), name="one")


def chain_graph(n):
    """Torso-mounted root followed by a chain of ``n - 1`` segments."""
    return MorphologyGraph((None,) + tuple(range(n - 1)), (0.0,) + (None,) * (n - 1), (0.0,) * n)


def branched_graph():
    """Two legs on the torso: 0 -> 1 -> 2 and 3 -> 4, with 3 chained after 0."""
    return MorphologyGraph((None, 0, 1, 0, 3), (-0.5, None, None, 0.5, None), (0.3, -0.6, 0.5, -0.3, 0.6))


def space_for(graph, params=(LENGTH,)):
    return DesignSpace(graph.n_nodes, tuple(params))


def randomize(nets, rng, scale=0.6):
    for net in nets:
        for p in net.params():
            p.data = rng.uniform(-scale, scale, p.data.shape)


def random_batch(graph, size, rng, done=None):
    n = graph.n_nodes
    obs_dim = 5 + 2 * n
    d = (rng.random((size, 1)) < 0.3).astype(float) if done is None else np.full((size, 1), float(done))
    return Batch(
        rng.standard_normal((size, obs_dim)),
        rng.uniform(-1, 1, (size, n)),
        rng.standard_normal((size, 1)),
        rng.standard_normal((size, obs_dim)),
        d,
    )


def permute_obs(obs, perm):
    """Reorder per-node observation blocks so new node ``k`` carries old node ``perm[k]``."""
    obs = np.atleast_2d(obs)
    n = len(perm)
    nodes = obs[:, 5:].reshape(obs.shape[0], n, 2)[:, list(perm), :]
    return np.hstack([obs[:, :5], nodes.reshape(obs.shape[0], -1)])


def permute_batch(batch, perm):
    return Batch(
        permute_obs(batch.s, perm),
        batch.a[:, list(perm)],
        batch.r,
        permute_obs(batch.s2, perm),
        batch.done,
    )


def reference_node_outputs(net, graph, node_inputs):
    """Node-by-node, edge-by-edge message passing written with plain loops.

    ``node_inputs`` is ``(N, in_dim)`` for a single transition.
    """
    cfg = net.config
    n = graph.n_nodes
    edges = []
    for child, parent in enumerate(graph.parents):
        if parent is not None:
            edges.append((parent, child, 1.0))
            edges.append((child, parent, -1.0))
    h = [np.zeros(cfg.hidden_size) for _ in range(n)]
    for _ in range(cfg.rounds):
        agg = [np.zeros(cfg.message_size) for _ in range(n)]
        for src, dst, feat in edges:
            agg[dst] = agg[dst] + net.message.forward_np(np.concatenate([h[src], [feat]])[None, :])[0]
        h = [net.process.forward_np(np.concatenate([node_inputs[i], agg[i], h[i]])[None, :])[0] for i in range(n)]
    return np.array([net.output.forward_np(h[i][None, :])[0] for i in range(n)])
