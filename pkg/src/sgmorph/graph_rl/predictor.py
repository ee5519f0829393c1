"""Graph network that regresses a morphology's best episodic reward from its design alone."""

import numpy as np

from ..numerics import autodiff as ad
from ..numerics.optim import Adam
from .gnn import GnnConfig, GraphNetwork, NodeLayout, design_features, graph_layout, item_average


class PredictorNet:
    """Node inputs are the scaled design parameters; the output is the node average.

    Targets are standardised with the statistics of the current training set.
    """

    def __init__(self, per_node_design, rng, config=GnnConfig(), max_batch=64):
        self.config = config
        self.net = GraphNetwork(per_node_design, 1, config, rng)
        self.optim = Adam(self.net.params(), lr=config.lr)
        self.max_batch = max_batch
        self.offset = 0.0
        self.scale = 1.0
        self.trained = False

    def _forward(self, items):
        layout = NodeLayout.union([graph_layout(g, 1) for g, _ in items])
        x = np.vstack([design_features(d) for _, d in items])
        return item_average(self.net(x, layout), layout)

    def train(self, dataset, iterations, rng):
        """``dataset`` is a list of ``(graph, design, best_reward)``; returns the final loss."""
        if not dataset:
            return None
        y_all = np.array([r for _, _, r in dataset], dtype=np.float64)
        self.offset = float(y_all.mean())
        std = float(y_all.std())
        self.scale = std if std > 1e-8 else 1.0
        loss_value = None
        for _ in range(iterations):
            if len(dataset) > self.max_batch:
                pick = rng.choice(len(dataset), self.max_batch, replace=False)
                items = [dataset[k] for k in pick]
            else:
                items = dataset
            y = (np.array([[r] for _, _, r in items]) - self.offset) / self.scale
            with ad.Tape() as tape:
                loss = ad.mean(ad.square(self._forward([(g, d) for g, d, _ in items]) - y))
            self.optim.step(tape.gradient(loss, self.optim.params))
            loss_value = loss.item()
        self.trained = True
        return loss_value

    def evaluate(self, graph, design):
        """``(predicted best reward, valid)``; untrained predictors return ``(0.0, False)``."""
        if not self.trained:
            return 0.0, False
        out = self._forward([(graph, design)]).item()
        return out * self.scale + self.offset, True

    def evaluate_many(self, graph, designs):
        if not self.trained:
            return np.zeros(len(designs))
        out = self._forward([(graph, d) for d in designs]).data[:, 0]
        return out * self.scale + self.offset
