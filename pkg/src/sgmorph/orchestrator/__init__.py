from .config import ALGORITHMS, PRESETS, ConfigError, ExperimentConfig, desk_preset, full_preset, load_config, save_config
from .landscape import Landscape, design_landscape, landscape_objective, write_landscape_csv, write_landscape_svg
from .logs import CYCLE_COLUMNS, EPISODE_COLUMNS, LOG_SCHEMA_VERSION, CycleRecord
from .loop import (
    CoAdaptationRun,
    RunAborted,
    RunLog,
    closed_form_episodes,
    cycle_schedule,
    initial_pool_plan,
    morphology_pool,
    run_baseline,
    run_sg_morph,
)
from .report import TopDesignReport, report_top_designs

__all__ = [
    "ALGORITHMS",
    "CYCLE_COLUMNS",
    "CoAdaptationRun",
    "ConfigError",
    "CycleRecord",
    "EPISODE_COLUMNS",
    "ExperimentConfig",
    "LOG_SCHEMA_VERSION",
    "Landscape",
    "PRESETS",
    "RunAborted",
    "RunLog",
    "TopDesignReport",
    "closed_form_episodes",
    "cycle_schedule",
    "design_landscape",
    "desk_preset",
    "full_preset",
    "initial_pool_plan",
    "landscape_objective",
    "load_config",
    "morphology_pool",
    "report_top_designs",
    "run_baseline",
    "run_sg_morph",
    "save_config",
    "write_landscape_csv",
    "write_landscape_svg",
]
