from .gnn import GnnConfig, GraphNetwork, NodeLayout, design_features, graph_layout, node_features
from .graph_sac import (
    GnnSac,
    GraphBatch,
    gnn_train_iterations,
    graph_sac_actor_loss,
    graph_sac_critic_loss,
    sample_multi_batch,
)

__all__ = [
    "GnnConfig",
    "GnnSac",
    "GraphBatch",
    "GraphNetwork",
    "NodeLayout",
    "design_features",
    "gnn_train_iterations",
    "graph_layout",
    "graph_sac_actor_loss",
    "graph_sac_critic_loss",
    "node_features",
    "sample_multi_batch",
]

from .predictor import PredictorNet
from .transfer import ImaginedDataset, NoMatchingGraphError, distillation_metrics, pretrain_specialist, relabel_states

__all__ += [
    "ImaginedDataset",
    "NoMatchingGraphError",
    "PredictorNet",
    "distillation_metrics",
    "pretrain_specialist",
    "relabel_states",
]
