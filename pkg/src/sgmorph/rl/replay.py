"""Replay storage: one ring buffer per (graph, design) and a keyed collection of them."""

from dataclasses import dataclass

import numpy as np

DEFAULT_CAPACITY = 60_000
SNAPSHOT_VERSION = 1


@dataclass
class Batch:
    """Columns of sampled transitions; ``r`` and ``done`` are ``(B, 1)``."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s2: np.ndarray
    done: np.ndarray

    def __len__(self):
        return self.s.shape[0]


def morphology_key(graph, design):
    return (graph.morphology_id, tuple(float(v) for v in design.values))


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions with uniform sampling.

    ``start`` marks transitions that begin an episode, so callers can draw
    initial states separately from mid-trajectory ones.
    """

    def __init__(self, obs_dim, act_dim, capacity=DEFAULT_CAPACITY, graph=None, design=None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.obs_dim = int(obs_dim)
        self.act_dim = int(act_dim)
        self.capacity = int(capacity)
        self.graph = graph
        self.design = design
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros((capacity, 1))
        self.s2 = np.zeros((capacity, obs_dim))
        self.done = np.zeros((capacity, 1))
        self.start = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0
        self.total_added = 0

    @property
    def key(self):
        if self.graph is None or self.design is None:
            return None
        return morphology_key(self.graph, self.design)

    def __len__(self):
        return self.size

    def add(self, s, a, r, s2, done, start=False):
        s = np.asarray(s, dtype=np.float64).reshape(-1)
        a = np.asarray(a, dtype=np.float64).reshape(-1)
        s2 = np.asarray(s2, dtype=np.float64).reshape(-1)
        if s.size != self.obs_dim or s2.size != self.obs_dim or a.size != self.act_dim:
            raise ValueError(
                f"transition shapes ({s.size}, {a.size}, {s2.size}) do not match buffer "
                f"({self.obs_dim}, {self.act_dim})"
            )
        i = self._next
        self.s[i] = s
        self.a[i] = a
        self.r[i, 0] = r
        self.s2[i] = s2
        self.done[i, 0] = float(done)
        self.start[i] = start
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.total_added += 1

    def add_episode(self, transitions):
        for k, (s, a, r, s2, done) in enumerate(transitions):
            self.add(s, a, r, s2, done, start=(k == 0))

    def _ordered(self):
        """Indices of stored transitions from oldest to newest."""
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def transitions(self):
        idx = self._ordered()
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx])

    def sample(self, batch_size, rng):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, batch_size)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx])

    def sample_states(self, count, rng):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return self.s[rng.integers(0, self.size, count)]

    def initial_states(self):
        return self.s[: self.size][self.start[: self.size]]

    def save(self, path):
        from ..morphology import serialize

        idx = self._ordered()
        meta = ""
        if self.graph is not None:
            params = self.design.space.params if self.design is not None else ()
            meta = serialize.dumps(self.graph, params, self.design)
        np.savez(
            path,
            version=SNAPSHOT_VERSION,
            capacity=self.capacity,
            total_added=self.total_added,
            s=self.s[idx],
            a=self.a[idx],
            r=self.r[idx],
            s2=self.s2[idx],
            done=self.done[idx],
            start=self.start[idx],
            morphology=meta,
        )

    @classmethod
    def load(cls, path):
        from ..morphology import serialize

        with np.load(path, allow_pickle=False) as z:
            if int(z["version"]) != SNAPSHOT_VERSION:
                raise ValueError(f"unsupported buffer snapshot version {int(z['version'])}")
            meta = str(z["morphology"])
            graph = design = None
            if meta:
                graph, _, design = serialize.loads(meta)
            s = z["s"]
            buf = cls(s.shape[1], z["a"].shape[1], int(z["capacity"]), graph, design)
            n = s.shape[0]
            buf.s[:n] = s
            buf.a[:n] = z["a"]
            buf.r[:n] = z["r"]
            buf.s2[:n] = z["s2"]
            buf.done[:n] = z["done"]
            buf.start[:n] = z["start"]
            buf.size = n
            buf._next = n % buf.capacity
            buf.total_added = int(z["total_added"])
        return buf


class ReplayBufferSet:
    """Buffers keyed by ``(morphology id, design values)`` in insertion order."""

    def __init__(self, capacity=DEFAULT_CAPACITY):
        self.capacity = capacity
        self._buffers = {}

    def __len__(self):
        return len(self._buffers)

    def __contains__(self, key):
        return key in self._buffers

    def __getitem__(self, key):
        return self._buffers[key]

    def keys(self):
        return list(self._buffers)

    def buffers(self):
        return list(self._buffers.values())

    def create(self, graph, design, obs_dim, act_dim):
        key = morphology_key(graph, design)
        if key in self._buffers:
            raise KeyError(f"buffer for {key} already exists")
        buf = ReplayBuffer(obs_dim, act_dim, self.capacity, graph, design)
        self._buffers[key] = buf
        return buf

    def insert(self, buffer):
        """Add an existing buffer (for example one restored from a snapshot)."""
        key = buffer.key
        if key is None:
            raise ValueError("only buffers tagged with a graph and design can be inserted")
        if key in self._buffers:
            raise KeyError(f"buffer for {key} already exists")
        self._buffers[key] = buffer
        return buffer

    def get_or_create(self, graph, design, obs_dim, act_dim):
        key = morphology_key(graph, design)
        if key in self._buffers:
            return self._buffers[key]
        return self.create(graph, design, obs_dim, act_dim)

    def matching_graph(self, morphology_id):
        return [b for k, b in self._buffers.items() if k[0] == morphology_id]

    def non_empty(self):
        return [b for b in self._buffers.values() if b.size > 0]
