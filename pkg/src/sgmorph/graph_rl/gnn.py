"""Message-passing networks over morphology graphs.

Several graphs (and several copies of each, one per transition) are batched
as a single disjoint union. Rows of every node-level array follow the order
``(graph block, transition b, node i)`` with ``row = offset + b * N + i``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..numerics import autodiff as ad
from ..numerics.layers import Mlp, get_arrays, set_arrays
from ..simenv.env import GLOBAL_OBS_DIM, NODE_OBS_DIM


@dataclass(frozen=True)
class GnnConfig:
    hidden_layers: tuple = (256, 256)
    hidden_size: int = 64
    message_size: int = 64
    rounds: int = 4
    lr: float = 5e-4
    gamma: float = 0.975
    tau: float = 0.01
    alpha: float = 0.01
    batch_per_graph: int = 128
    graphs_per_batch: int = 5


@dataclass(frozen=True)
class NodeLayout:
    """Row bookkeeping for a disjoint union of graph copies.

    ``item[r]`` is the transition a row belongs to and ``count[t]`` the node
    count of transition ``t``; ``src``/``dst``/``feat`` list directed edges.
    """

    n_rows: int
    n_items: int
    item: np.ndarray
    count: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    feat: np.ndarray

    @staticmethod
    def union(layouts):
        item, count, src, dst, feat = [], [], [], [], []
        rows = items = 0
        for lay in layouts:
            item.append(lay.item + items)
            count.append(lay.count)
            src.append(lay.src + rows)
            dst.append(lay.dst + rows)
            feat.append(lay.feat)
            rows += lay.n_rows
            items += lay.n_items
        return NodeLayout(
            rows,
            items,
            np.concatenate(item),
            np.concatenate(count),
            np.concatenate(src),
            np.concatenate(dst),
            np.concatenate(feat).reshape(-1, 1),
        )


@lru_cache(maxsize=256)
def graph_layout(graph, copies):
    """Layout of ``copies`` disjoint copies of ``graph``."""
    n = graph.n_nodes
    src, dst, feat = graph.directed_edges()
    offsets = (np.arange(copies) * n)[:, None]
    return NodeLayout(
        n_rows=copies * n,
        n_items=copies,
        item=np.repeat(np.arange(copies), n),
        count=np.full(copies, n),
        src=(offsets + np.asarray(src)[None, :]).reshape(-1),
        dst=(offsets + np.asarray(dst)[None, :]).reshape(-1),
        feat=np.tile(np.asarray(feat, dtype=np.float64), copies).reshape(-1, 1),
    )


def design_features(design):
    """Per-node design parameters rescaled from their bounds to ``[-1, 1]``; shape ``(N, p)``."""
    space = design.space
    lo, hi = space.lower, space.upper
    scaled = 2.0 * (np.asarray(design.values) - lo) / (hi - lo) - 1.0
    return scaled.reshape(space.n_nodes, space.per_node)


def design_features_array(values, space):
    """Batched :func:`design_features` for raw design arrays ``(P, dim)`` -> ``(P, N, p)``."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    scaled = 2.0 * (values - space.lower) / (space.upper - space.lower) - 1.0
    return scaled.reshape(values.shape[0], space.n_nodes, space.per_node)


def node_features(obs, design_feats):
    """Stack per-node inputs ``(s^i, s^g, xi^i)``.

    ``obs`` is ``(B, 5 + 2N)``; ``design_feats`` is ``(N, p)`` shared by the
    batch or ``(B, N, p)`` per transition. Returns ``(B * N, 2 + 5 + p)``.
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    b = obs.shape[0]
    design_feats = np.asarray(design_feats, dtype=np.float64)
    n, p = design_feats.shape[-2:]
    if obs.shape[1] != GLOBAL_OBS_DIM + NODE_OBS_DIM * n:
        raise ad.ShapeError(f"observation width {obs.shape[1]} does not fit a {n}-node graph")
    local = obs[:, GLOBAL_OBS_DIM:].reshape(b, n, NODE_OBS_DIM)
    glob = np.broadcast_to(obs[:, None, :GLOBAL_OBS_DIM], (b, n, GLOBAL_OBS_DIM))
    xi = np.broadcast_to(design_feats, (b, n, p))
    return np.concatenate([local, glob, xi], axis=2).reshape(b * n, -1)


def node_input_dim(per_node):
    return NODE_OBS_DIM + GLOBAL_OBS_DIM + per_node


class GraphNetwork:
    """Shared processing, message and output networks applied to every node.

    ``h_0 = 0``; each round sends ``message(h_j, e_ji)`` along every directed
    edge, sums the messages at each receiver and updates
    ``h_i <- process(x_i, m_i, h_i)``. The output network maps ``h_T`` to
    ``out_dim`` values per node.
    """

    def __init__(self, in_dim, out_dim, config, rng):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.config = config
        hs, ms, layers = config.hidden_size, config.message_size, config.hidden_layers
        self.process = Mlp(in_dim + ms + hs, layers, hs, rng, out_activation="tanh", init_w=1.0 / np.sqrt(layers[-1]))
        self.message = Mlp(hs + 1, layers, ms, rng, out_activation="tanh", init_w=1.0 / np.sqrt(layers[-1]))
        self.output = Mlp(hs, layers, out_dim, rng)

    def params(self):
        return self.process.params() + self.message.params() + self.output.params()

    def latents(self, x, layout):
        x = ad.as_tensor(x)
        if x.shape != (layout.n_rows, self.in_dim):
            raise ad.ShapeError(f"node inputs {x.shape} do not match ({layout.n_rows}, {self.in_dim})")
        cfg = self.config
        h = ad.Tensor(np.zeros((layout.n_rows, cfg.hidden_size)))
        no_edges = layout.src.size == 0
        for _ in range(cfg.rounds):
            if no_edges:
                agg = ad.Tensor(np.zeros((layout.n_rows, cfg.message_size)))
            else:
                sent = self.message(ad.concat([ad.take_rows(h, layout.src), layout.feat], axis=1))
                agg = ad.scatter_add_rows(sent, layout.dst, layout.n_rows)
            h = self.process(ad.concat([x, agg, h], axis=1))
        return h

    def __call__(self, x, layout):
        return self.output(self.latents(x, layout))

    def arrays(self):
        return get_arrays(self.params())

    def load_arrays(self, arrays):
        set_arrays(self.params(), arrays)


def node_average(values, layout):
    """Average a per-row column over the nodes of each transition and broadcast it back."""
    totals = ad.scatter_add_rows(values, layout.item, layout.n_items)
    means = totals * (1.0 / layout.count.reshape(-1, 1))
    return ad.take_rows(means, layout.item)


def item_average(values, layout):
    """Per-transition node average, shape ``(n_items, 1)``."""
    totals = ad.scatter_add_rows(values, layout.item, layout.n_items)
    return totals * (1.0 / layout.count.reshape(-1, 1))
