"""Run directory layout, incremental CSV logging and readers for finished runs."""

import csv
import json
import os
from dataclasses import dataclass, field

from ..morphology import serialize

LOG_SCHEMA_VERSION = 1

EPISODE_COLUMNS = ("visit", "cycle", "episode", "policy_kind", "episodic_reward")
CYCLE_COLUMNS = (
    "visit",
    "cycle",
    "mode",
    "morphology_id",
    "graph",
    "design",
    "estimated_objective",
    "episodes",
    "best_reward",
    "mean_reward",
    "gnn_eval_best",
    "pretrain_kl",
    "pretrain_value",
    "design_opt_env_steps",
    "wall_seconds",
)

# policy kinds written to episodes.csv
MLP, GNN, GNN_EVAL = "mlp", "gnn", "gnn_eval"


@dataclass
class CycleRecord:
    visit: int
    cycle: int  # -1 for the initial pool
    mode: str  # initial | exploit | explore
    graph: object
    design: object
    estimated_objective: float = None
    rewards: list = field(default_factory=list)
    gnn_eval_rewards: list = field(default_factory=list)
    pretrain_kl: float = None
    pretrain_value: float = None
    design_opt_env_steps: int = 0
    wall_seconds: float = 0.0

    @property
    def best_reward(self):
        return float(max(self.rewards)) if self.rewards else float("nan")

    def row(self):
        def opt(v):
            return "" if v is None else repr(float(v))

        return {
            "visit": self.visit,
            "cycle": self.cycle,
            "mode": self.mode,
            "morphology_id": self.graph.morphology_id,
            "graph": self.graph.name,
            "design": json.dumps([float(v) for v in self.design.values]),
            "estimated_objective": opt(self.estimated_objective),
            "episodes": len(self.rewards),
            "best_reward": repr(self.best_reward),
            "mean_reward": repr(float(sum(self.rewards) / len(self.rewards))) if self.rewards else "nan",
            "gnn_eval_best": opt(max(self.gnn_eval_rewards)) if self.gnn_eval_rewards else "",
            "pretrain_kl": opt(self.pretrain_kl),
            "pretrain_value": opt(self.pretrain_value),
            "design_opt_env_steps": self.design_opt_env_steps,
            "wall_seconds": f"{self.wall_seconds:.3f}",
        }


class RunWriter:
    """Appends rows to the run's CSV files and flushes after every write."""

    def __init__(self, run_dir, resume=False):
        self.run_dir = run_dir
        os.makedirs(run_dir, exist_ok=True)
        os.makedirs(self.path("snapshots"), exist_ok=True)
        self._episodes = self._open("episodes.csv", EPISODE_COLUMNS, resume)
        self._cycles = self._open("cycles.csv", CYCLE_COLUMNS, resume)

    def path(self, *parts):
        return os.path.join(self.run_dir, *parts)

    def _open(self, name, columns, resume):
        path = self.path(name)
        append = resume and os.path.exists(path)
        fh = open(path, "a" if append else "w", newline="")
        writer = csv.DictWriter(fh, fieldnames=columns)
        if not append:
            writer.writeheader()
            fh.flush()
        return fh, writer

    def episode(self, visit, cycle, episode, policy_kind, reward):
        fh, w = self._episodes
        w.writerow(
            {"visit": visit, "cycle": cycle, "episode": episode, "policy_kind": policy_kind, "episodic_reward": repr(float(reward))}
        )
        fh.flush()

    def cycle(self, record):
        fh, w = self._cycles
        w.writerow(record.row())
        fh.flush()

    def status(self, state, **extra):
        doc = {"schema_version": LOG_SCHEMA_VERSION, "status": state, **extra}
        with open(self.path("run.json"), "w") as fh:
            json.dump(doc, fh, indent=2)

    def close(self):
        for fh, _ in (self._episodes, self._cycles):
            fh.close()


def write_designs(path, records, params):
    """Every visited (graph, design) in visit order, in the morphology exchange format."""
    doc = {
        "schema_version": LOG_SCHEMA_VERSION,
        "designs": [
            {"visit": r.visit, "mode": r.mode, **serialize.to_dict(r.graph, params, r.design)} for r in records
        ],
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
    os.replace(tmp, path)


def read_designs(path):
    """``[(visit, graph, design)]`` from a designs.json file."""
    with open(path) as fh:
        doc = json.load(fh)
    out = []
    for entry in doc["designs"]:
        visit = entry.get("visit")
        body = {k: v for k, v in entry.items() if k not in ("visit", "mode")}
        graph, _, design = serialize.from_dict(body)
        out.append((visit, graph, design))
    return out


def truncate_rows(path, keep):
    """Rewrite a CSV keeping the header and rows whose ``visit`` satisfies ``keep``."""
    if not os.path.exists(path):
        return
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames
        rows = [r for r in reader if keep(int(r["visit"]))]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
