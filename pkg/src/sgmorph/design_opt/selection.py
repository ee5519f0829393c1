"""Ranking candidate morphologies and choosing the next prototype."""

import json
from dataclasses import dataclass

import numpy as np

from ..morphology import Design, sample_random_design
from .pso import pso_optimize


@dataclass
class RankedCandidate:
    graph: object
    design: Design
    objective: float


def rank_candidates(graphs, objective_factory, space_of, config, rng):
    """Optimise a design for every graph and sort by estimated objective, best first.

    ``objective_factory(graph)`` returns ``evaluate_many(X) -> (P,)``. The sort
    is stable, so ties keep catalog order.
    """
    found = []
    for graph in graphs:
        space = space_of(graph)
        result = pso_optimize(objective_factory(graph), space.lower, space.upper, config, rng)
        found.append(RankedCandidate(graph, Design(space, result.best), result.value))
    order = sorted(range(len(found)), key=lambda k: -found[k].objective)
    return [found[k] for k in order]


def selection_weights(k):
    """Normalised ``f(r) = ln(k + 2) - ln(r)`` for ranks ``r = 1..k``."""
    r = np.arange(1, k + 1, dtype=np.float64)
    f = np.log(k + 2.0) - np.log(r)
    return f / f.sum()


def select_morphology(ranked, rng):
    if not ranked:
        raise ValueError("nothing to select from")
    return ranked[int(rng.choice(len(ranked), p=selection_weights(len(ranked))))]


def random_morphology_selection(graphs, space_of, rng):
    """Uniform graph, then a uniform design within its bounds."""
    graph = graphs[int(rng.integers(len(graphs)))]
    return graph, sample_random_design(space_of(graph), rng)


def ranking_records(ranked):
    return [
        {
            "rank": k + 1,
            "morphology_id": c.graph.morphology_id,
            "graph": c.graph.name,
            "design": [float(v) for v in c.design.values],
            "objective": float(c.objective),
        }
        for k, c in enumerate(ranked)
    ]


def write_ranking(path, ranked, cycle):
    with open(path, "w") as fh:
        json.dump({"cycle": cycle, "candidates": ranking_records(ranked)}, fh, indent=2)
