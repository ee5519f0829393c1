import hashlib
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """A morphology graph violates the tree/actuator invariants."""


@dataclass(frozen=True)
class MorphologyGraph:
    """Actuator graph: one node per motorised limb segment.

    ``parents[i]`` is the graph parent of node ``i`` (``None`` for the root).
    ``mounts[i]`` is the torso x-offset where node ``i``'s segment attaches, or
    ``None`` when it hangs off the distal tip of its graph parent's segment.
    ``rest_angles[i]`` is the joint's rest angle in radians.
    """

    parents: tuple
    mounts: tuple
    rest_angles: tuple
    name: str = ""
    morphology_id: str = field(init=False)

    def __post_init__(self):
        n = len(self.parents)
        if n == 0:
            raise GraphError("graph needs at least one node")
        if not (len(self.mounts) == len(self.rest_angles) == n):
            raise GraphError("parents, mounts and rest_angles must have equal length")
        roots = [i for i, p in enumerate(self.parents) if p is None]
        if len(roots) != 1:
            raise GraphError(f"expected exactly one root, found {len(roots)}")
        for i, p in enumerate(self.parents):
            if p is not None and (not 0 <= p < n or p == i):
                raise GraphError(f"node {i} has invalid parent {p}")
        # every node must reach the root without revisiting
        for i in range(n):
            seen = set()
            j = i
            while j is not None:
                if j in seen:
                    raise GraphError(f"cycle through node {j}")
                seen.add(j)
                j = self.parents[j]
        if self.mounts[roots[0]] is None:
            raise GraphError("root node must be mounted on the torso")
        for i, (p, m) in enumerate(zip(self.parents, self.mounts)):
            if m is not None and p is not None and self.mounts[p] is None:
                raise GraphError(f"torso-mounted node {i} must neighbour another torso-mounted node")
        object.__setattr__(self, "morphology_id", _topology_key(self))

    @property
    def n_nodes(self):
        return len(self.parents)

    @property
    def root(self):
        return self.parents.index(None)

    def children(self, i):
        return [j for j, p in enumerate(self.parents) if p == i]

    def adjacency(self):
        n = self.n_nodes
        a = np.zeros((n, n), dtype=np.int8)
        for i, p in enumerate(self.parents):
            if p is not None:
                a[i, p] = a[p, i] = 1
        return a

    def directed_edges(self):
        """``(src, dst, feature)`` arrays; parent->child carries +1, child->parent -1."""
        src, dst, feat = [], [], []
        for i, p in enumerate(self.parents):
            if p is None:
                continue
            src += [p, i]
            dst += [i, p]
            feat += [1.0, -1.0]
        return np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), np.array(feat)

    def topological_order(self):
        order = [self.root]
        k = 0
        while k < len(order):
            order += self.children(order[k])
            k += 1
        return order

    def permuted(self, perm):
        """Relabel nodes so that old node ``perm[k]`` becomes new node ``k``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n_nodes)):
            raise GraphError(f"not a permutation of {self.n_nodes} nodes: {perm}")
        new_of_old = {old: new for new, old in enumerate(perm)}
        parents = tuple(None if self.parents[o] is None else new_of_old[self.parents[o]] for o in perm)
        return MorphologyGraph(
            parents=parents,
            mounts=tuple(self.mounts[o] for o in perm),
            rest_angles=tuple(self.rest_angles[o] for o in perm),
            name=self.name,
        )


def graph_from_legs(legs, name=""):
    """Build a graph from leg descriptions ``[{"mount": x, "rest": [...]}, ...]``.

    Leg roots are chained in list order so the graph stays a connected tree.
    """
    parents, mounts, rests = [], [], []
    prev_root = None
    for leg in legs:
        if not leg["rest"]:
            raise GraphError("every leg needs at least one segment")
        for k, rest in enumerate(leg["rest"]):
            idx = len(parents)
            if k == 0:
                parents.append(prev_root)
                mounts.append(float(leg["mount"]))
                prev_root = idx
            else:
                parents.append(idx - 1)
                mounts.append(None)
            rests.append(float(rest))
    return MorphologyGraph(tuple(parents), tuple(mounts), tuple(rests), name=name)


def _topology_key(g):
    kids = {i: [] for i in range(g.n_nodes)}
    for i, p in enumerate(g.parents):
        if p is not None:
            kids[p].append(i)

    def canon(i):
        mount = "tip" if g.mounts[i] is None else repr(float(g.mounts[i]))
        inner = ",".join(sorted(canon(j) for j in kids[i]))
        return f"({mount}|{float(g.rest_angles[i])!r}[{inner}])"

    digest = hashlib.sha1(canon(g.root).encode()).hexdigest()[:12]
    return f"g{g.n_nodes}-{digest}"
