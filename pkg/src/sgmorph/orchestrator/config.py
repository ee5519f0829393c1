"""Experiment configuration: one flat JSON object, unknown keys rejected."""

import json
from dataclasses import asdict, dataclass, fields, replace

from ..morphology import ENV_KINDS

ALGORITHMS = ("sg_morph", "gnn_predictor", "gnn_only", "no_transfer", "random")

_TUPLE_FIELDS = ("morphologies", "mlp_hidden", "gnn_hidden_layers")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    env_kind: str = "halfcheetah"
    seed: int = 0
    algorithm: str = "sg_morph"
    output_dir: str = "runs/sg_morph"
    # graph names to use from the catalog; None keeps the whole catalog
    morphologies: tuple = None

    # schedule
    initial_designs_per_morphology: int = 2
    initial_episodes_per_design: int = 50
    episodes_per_selected_design: int = 100
    exploit_cycles: int = 25
    explore_cycles: int = 25
    mlp_iterations_per_episode: int = 1000
    gnn_iterations_per_episode: int = 100
    buffers_per_gnn_batch: int = 5
    gnn_eval_every: int = 10
    snapshot_every: int = 5
    replay_capacity: int = 60_000

    # specialist
    mlp_hidden: tuple = (200, 200, 200)
    mlp_batch_size: int = 256
    mlp_lr: float = 1e-3

    # generalist
    gnn_hidden_layers: tuple = (256, 256)
    gnn_hidden_size: int = 64
    gnn_message_size: int = 64
    gnn_rounds: int = 4
    gnn_batch_per_graph: int = 128
    gnn_lr: float = 5e-4

    # transfer
    relabel_count: int = 200_000
    pretrain_iterations: int = 20_000
    pretrain_batch_size: int = 256
    pretrain_lr: float = 5e-4

    # design optimisation
    objective_states: int = 128
    pso_particles: int = 80
    pso_iterations: int = 50
    predictor_iterations: int = 1000

    def __post_init__(self):
        for name in _TUPLE_FIELDS:
            value = getattr(self, name)
            if isinstance(value, list):
                object.__setattr__(self, name, tuple(value))
        self.validate()

    def validate(self):
        if self.env_kind not in ENV_KINDS:
            raise ConfigError(f"env_kind must be one of {ENV_KINDS}, got {self.env_kind!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        positive = (
            "initial_designs_per_morphology",
            "initial_episodes_per_design",
            "episodes_per_selected_design",
            "mlp_iterations_per_episode",
            "gnn_iterations_per_episode",
            "buffers_per_gnn_batch",
            "replay_capacity",
            "mlp_batch_size",
            "gnn_hidden_size",
            "gnn_message_size",
            "gnn_rounds",
            "gnn_batch_per_graph",
            "relabel_count",
            "pretrain_iterations",
            "pretrain_batch_size",
            "objective_states",
            "pso_iterations",
            "predictor_iterations",
        )
        for name in positive:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        for name in ("exploit_cycles", "explore_cycles", "gnn_eval_every", "snapshot_every"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
        if self.exploit_cycles + self.explore_cycles < 1:
            raise ConfigError("at least one cycle is required")
        if self.pso_particles < 2:
            raise ConfigError("pso_particles must be at least 2")
        for name in ("mlp_lr", "gnn_lr", "pretrain_lr"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("mlp_hidden", "gnn_hidden_layers"):
            layers = getattr(self, name)
            if not layers or any(not isinstance(w, int) or w < 1 for w in layers):
                raise ConfigError(f"{name} must be a non-empty list of positive widths")
        if self.morphologies is not None and not self.morphologies:
            raise ConfigError("morphologies must be null or a non-empty list of graph names")

    @property
    def n_cycles(self):
        return self.exploit_cycles + self.explore_cycles

    def with_overrides(self, **changes):
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        doc = asdict(self)
        for name in _TUPLE_FIELDS:
            if doc[name] is not None:
                doc[name] = list(doc[name])
        return doc

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(doc)


def save_config(config, path):
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")


def full_preset(env_kind="halfcheetah", seed=0, algorithm="sg_morph", output_dir="runs/full"):
    """Schedule and network sizes of the original experiments."""
    return ExperimentConfig(env_kind=env_kind, seed=seed, algorithm=algorithm, output_dir=output_dir)


DESK_MORPHOLOGIES = {
    "halfcheetah": ("hc_b1_f1", "hc_b2_f2", "hc_b3_f3"),
    "crawler": ("cr_uni3", "cr_bi2_2", "cr_bi3_3"),
    "multiped": ("mp_bi2_2", "mp_quad1", "mp_bi3_3"),
    "multiped_stairs": ("mp_bi2_2", "mp_quad1", "mp_bi3_3"),
}


def desk_preset(env_kind="halfcheetah", seed=0, algorithm="sg_morph", output_dir="runs/desk"):
    """A single-core run of a few minutes: three morphologies and shrunken networks.

    The schedule keeps the structure of the full experiment (initial pool,
    alternating cycles, transfer) with 10 initial and 20 selected episodes
    and 6 + 6 cycles.
    """
    return ExperimentConfig(
        env_kind=env_kind,
        seed=seed,
        algorithm=algorithm,
        output_dir=output_dir,
        morphologies=DESK_MORPHOLOGIES[env_kind],
        initial_episodes_per_design=10,
        episodes_per_selected_design=20,
        exploit_cycles=6,
        explore_cycles=6,
        mlp_iterations_per_episode=50,
        gnn_iterations_per_episode=5,
        gnn_eval_every=10,
        snapshot_every=3,
        replay_capacity=20_000,
        mlp_hidden=(64, 64),
        mlp_batch_size=128,
        gnn_hidden_layers=(64,),
        gnn_hidden_size=32,
        gnn_message_size=32,
        gnn_batch_per_graph=64,
        relabel_count=20_000,
        pretrain_iterations=300,
        pretrain_batch_size=128,
        objective_states=32,
        pso_particles=40,
        pso_iterations=25,
        predictor_iterations=300,
    )


PRESETS = {"full": full_preset, "desk": desk_preset}
