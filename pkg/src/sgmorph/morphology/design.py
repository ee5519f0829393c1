from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lo: float
    hi: float
    unit: str = ""

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"parameter {self.name!r}: lower bound {self.lo} not below upper {self.hi}")


@dataclass(frozen=True)
class DesignSpace:
    """Per-node parameter descriptors; every node carries the same parameter list."""

    n_nodes: int
    params: tuple

    @property
    def per_node(self):
        return len(self.params)

    @property
    def dim(self):
        return self.n_nodes * self.per_node

    @property
    def lower(self):
        return np.tile([p.lo for p in self.params], self.n_nodes).astype(np.float64)

    @property
    def upper(self):
        return np.tile([p.hi for p in self.params], self.n_nodes).astype(np.float64)

    def index(self, name):
        for k, p in enumerate(self.params):
            if p.name == name:
                return k
        raise KeyError(name)

    def contains(self, values):
        v = np.asarray(values, dtype=np.float64)
        return v.shape == (self.dim,) and bool(np.all(v >= self.lower) and np.all(v <= self.upper))


class Design:
    """Continuous design parameters for one graph, stored flat (node-major)."""

    __slots__ = ("space", "_values")

    def __init__(self, space, values):
        v = np.array(values, dtype=np.float64).reshape(-1)
        if v.shape != (space.dim,):
            raise ValueError(f"design needs {space.dim} values, got {v.size}")
        if not space.contains(v):
            raise ValueError(f"design values outside bounds: {v.tolist()}")
        v.flags.writeable = False
        self.space = space
        self._values = v

    @property
    def values(self):
        return self._values

    def per_node(self):
        return self._values.reshape(self.space.n_nodes, self.space.per_node)

    def param(self, name):
        return self.per_node()[:, self.space.index(name)]

    def permuted(self, perm):
        return Design(self.space, self.per_node()[list(perm)].reshape(-1))

    def __eq__(self, other):
        return isinstance(other, Design) and self.space == other.space and np.array_equal(self._values, other._values)

    def __hash__(self):
        return hash((self.space, self._values.tobytes()))

    def __repr__(self):
        return f"Design({self._values.tolist()})"


def sample_random_design(space, rng):
    return Design(space, rng.uniform(space.lower, space.upper))


def clamp_design(values, space):
    v = np.clip(np.asarray(values, dtype=np.float64).reshape(-1), space.lower, space.upper)
    return Design(space, v)
