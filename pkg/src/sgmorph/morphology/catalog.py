import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .design import DesignSpace, ParamSpec
from .graph import graph_from_legs

ENV_KINDS = ("halfcheetah", "crawler", "multiped", "multiped_stairs")

# Multi-Ped+Stairs reuses the Multi-Ped morphologies.
_CATALOG_ALIAS = {"multiped_stairs": "multiped"}


@dataclass(frozen=True)
class MorphologyPool:
    env_kind: str
    graphs: tuple
    params: tuple
    version: int

    def __post_init__(self):
        ids = [g.morphology_id for g in self.graphs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate morphology ids in pool: {ids}")

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, k):
        return self.graphs[k]

    def by_id(self, morphology_id):
        for g in self.graphs:
            if g.morphology_id == morphology_id:
                return g
        raise KeyError(morphology_id)

    def design_space(self, graph):
        return DesignSpace(graph.n_nodes, self.params)

    def subset(self, names):
        """Pool restricted to the named graphs, keeping catalog order."""
        keep = tuple(g for g in self.graphs if g.name in set(names))
        missing = set(names) - {g.name for g in keep}
        if missing:
            raise KeyError(f"unknown graph names: {sorted(missing)}")
        return MorphologyPool(self.env_kind, keep, self.params, self.version)


@lru_cache(maxsize=None)
def _load():
    text = resources.files("sgmorph.morphology").joinpath("data/catalogs.json").read_text()
    return json.loads(text)


def build_catalog(env_kind):
    if env_kind not in ENV_KINDS:
        raise ValueError(f"unknown env_kind {env_kind!r}; expected one of {ENV_KINDS}")
    data = _load()
    entry = data["envs"][_CATALOG_ALIAS.get(env_kind, env_kind)]
    params = tuple(ParamSpec(p["name"], float(p["lo"]), float(p["hi"]), p.get("unit", "")) for p in entry["params"])
    graphs = tuple(graph_from_legs(g["legs"], name=g["name"]) for g in entry["graphs"])
    return MorphologyPool(env_kind, graphs, params, int(data["version"]))
