from dataclasses import dataclass

import numpy as np

from . import physics


@dataclass(frozen=True)
class StairsConfig:
    first_x: float = 1.5
    n_steps: int = 8
    depth: float = 0.5
    rise: float = 0.05


class Terrain:
    """Flat ground at z = 0 plus axis-aligned blocks ``(start_x, width, height)``."""

    def __init__(self, blocks=()):
        b = np.array(blocks, dtype=np.float64).reshape(-1, 3)
        if b.shape[0]:
            if np.any(b[:, 1] <= 0) or np.any(b[:, 2] <= 0):
                raise ValueError("blocks need positive width and height")
            if np.any(np.diff(b[:, 0]) <= 0) or np.any(b[:-1, 0] + b[:-1, 1] > b[1:, 0] + 1e-12):
                raise ValueError("blocks must be non-overlapping with ascending start_x")
        self.blocks = np.ascontiguousarray(b)

    @property
    def flat(self):
        return self.blocks.shape[0] == 0

    def height(self, x):
        return float(physics.terrain_height(self.blocks, float(x)))


def build_terrain(env_kind, config=None):
    if env_kind != "multiped_stairs":
        return Terrain()
    c = config or StairsConfig()
    blocks = [(c.first_x + k * c.depth, c.depth, c.rise * (k + 1)) for k in range(c.n_steps)]
    return Terrain(blocks)
