from .replay import Batch, ReplayBuffer, ReplayBufferSet, morphology_key
from .sac import MlpSac, SacConfig, mlp_alpha, mlp_train_iterations, sac_actor_loss, sac_critic_loss, sample_action
from .toy import VelocityTargetTask

__all__ = [
    "Batch",
    "MlpSac",
    "ReplayBuffer",
    "ReplayBufferSet",
    "SacConfig",
    "VelocityTargetTask",
    "mlp_alpha",
    "mlp_train_iterations",
    "morphology_key",
    "sac_actor_loss",
    "sac_critic_loss",
    "sample_action",
]
