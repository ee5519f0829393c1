from .objective import DesignObjective, initial_state_batch, objective_eval
from .pso import PsoConfig, PsoResult, pso_optimize
from .selection import (
    RankedCandidate,
    random_morphology_selection,
    rank_candidates,
    ranking_records,
    select_morphology,
    selection_weights,
    write_ranking,
)

__all__ = [
    "DesignObjective",
    "PsoConfig",
    "PsoResult",
    "RankedCandidate",
    "initial_state_batch",
    "objective_eval",
    "pso_optimize",
    "random_morphology_selection",
    "rank_candidates",
    "ranking_records",
    "select_morphology",
    "selection_weights",
    "write_ranking",
]
