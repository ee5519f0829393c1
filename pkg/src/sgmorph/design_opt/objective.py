"""Surrogate score of an unbuilt design under the generalist actor-critic."""

import numpy as np

from ..graph_rl.gnn import design_features_array, graph_layout, item_average, node_features
from ..morphology import clamp_design
from ..numerics import autodiff as ad


def initial_state_batch(buffer_set, graph, count, rng):
    """``count`` episode-start states drawn uniformly from buffers with the same graph."""
    pool = [b.initial_states() for b in buffer_set.matching_graph(graph.morphology_id)]
    pool = [p for p in pool if p.shape[0]]
    if not pool:
        raise ValueError(f"no initial states recorded for graph {graph.morphology_id}")
    states = np.vstack(pool)
    return states[rng.integers(0, states.shape[0], count)]


class DesignObjective:
    """``o(xi) = mean_s mean_i min_k Q_k^i(s, tanh(mu(s, xi)), xi)`` on a fixed state batch.

    Evaluation reads the networks but never modifies them, and designs
    outside the bounds are clamped first.
    """

    def __init__(self, gnn, graph, space, states, chunk_rows=40_000):
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if states.shape[0] == 0:
            raise ValueError("the evaluation state batch is empty")
        self.gnn = gnn
        self.graph = graph
        self.space = space
        self.states = states
        self.chunk_rows = chunk_rows

    def __call__(self, design_values):
        return float(self.evaluate_many(np.atleast_2d(design_values))[0])

    def evaluate_many(self, designs):
        designs = np.atleast_2d(np.asarray(designs, dtype=np.float64))
        clamped = np.array([clamp_design(v, self.space).values for v in designs])
        n_states = self.states.shape[0]
        per_chunk = max(1, self.chunk_rows // (n_states * self.graph.n_nodes))
        out = np.empty(clamped.shape[0])
        for start in range(0, clamped.shape[0], per_chunk):
            block = clamped[start : start + per_chunk]
            out[start : start + block.shape[0]] = self._evaluate_block(block)
        return out

    def _evaluate_block(self, designs):
        p, s = designs.shape[0], self.states.shape[0]
        feats = np.repeat(design_features_array(designs, self.space), s, axis=0)
        obs = np.tile(self.states, (p, 1))
        x = node_features(obs, feats)
        layout = graph_layout(self.graph, p * s)
        gnn = self.gnn
        head = gnn.actor(x, layout).data
        action = np.tanh(head[:, :1])
        sa = np.hstack([x, action])
        q = np.minimum(gnn.q1(sa, layout).data, gnn.q2(sa, layout).data)
        per_state = item_average(ad.Tensor(q), layout).data.reshape(p, s)
        return per_state.mean(axis=1)


def objective_eval(design, objective):
    values = design.values if hasattr(design, "values") else design
    return objective(values)
