from .env import (
    ArticulatedAgent,
    LocomotionEnv,
    SimConfig,
    SimulationError,
    StepCounter,
    build_agent,
    rollout,
)
from .terrain import StairsConfig, Terrain, build_terrain

__all__ = [
    "ArticulatedAgent",
    "LocomotionEnv",
    "SimConfig",
    "SimulationError",
    "StairsConfig",
    "StepCounter",
    "Terrain",
    "build_agent",
    "build_terrain",
    "rollout",
]
