from .catalog import ENV_KINDS, MorphologyPool, build_catalog
from .design import Design, DesignSpace, ParamSpec, clamp_design, sample_random_design
from .graph import GraphError, MorphologyGraph, graph_from_legs
from .serialize import MorphologyFormatError

__all__ = [
    "ENV_KINDS",
    "Design",
    "DesignSpace",
    "GraphError",
    "MorphologyFormatError",
    "MorphologyGraph",
    "MorphologyPool",
    "ParamSpec",
    "build_catalog",
    "clamp_design",
    "graph_from_legs",
    "sample_random_design",
]
