"""Summaries across finished runs: the best designs each run found."""

import json
import os
from dataclasses import dataclass

import numpy as np

from .logs import GNN_EVAL, read_csv


@dataclass
class RunSummary:
    run: str
    algorithm: str
    top: list  # [(morphology_id, design values, best reward)], best first
    score: float  # mean best reward of the top designs


@dataclass
class TopDesignReport:
    runs: list
    mean: float
    std: float  # sample standard deviation across runs, 0 for a single run

    def table(self):
        lines = [f"{'run':40s} {'algorithm':14s} {'top-k mean':>12s}"]
        for r in self.runs:
            lines.append(f"{r.run:40s} {r.algorithm:14s} {r.score:12.4f}")
        lines.append(f"{'mean +- std':55s} {self.mean:.4f} +- {self.std:.4f}")
        return "\n".join(lines)


def best_rewards_by_design(episode_rows):
    """Best training-episode reward per visited (graph, design), keyed by visit.

    Generalist evaluation episodes are ignored; they do not collect experience.
    """
    best = {}
    for row in episode_rows:
        if row["policy_kind"] == GNN_EVAL:
            continue
        visit = int(row["visit"])
        best[visit] = max(best.get(visit, -np.inf), float(row["episodic_reward"]))
    return best


def _summarise_dir(run_dir, top_k):
    cycles = read_csv(os.path.join(run_dir, "cycles.csv"))
    best = best_rewards_by_design(read_csv(os.path.join(run_dir, "episodes.csv")))
    algorithm = ""
    config_path = os.path.join(run_dir, "config.json")
    if os.path.exists(config_path):
        with open(config_path) as fh:
            algorithm = json.load(fh).get("algorithm", "")
    # the same (graph, design) may be visited twice; keep its single best episode
    combos = {}
    for row in cycles:
        key = (row["morphology_id"], tuple(json.loads(row["design"])))
        reward = best.get(int(row["visit"]), -np.inf)
        combos[key] = max(combos.get(key, -np.inf), reward)
    return _summary(os.path.basename(os.path.normpath(run_dir)), algorithm, combos, top_k)


def _summarise_log(log, top_k):
    combos = {}
    for rec in log.records:
        key = (rec.graph.morphology_id, tuple(float(v) for v in rec.design.values))
        combos[key] = max(combos.get(key, -np.inf), rec.best_reward)
    return _summary(os.path.basename(os.path.normpath(log.run_dir)), log.config.algorithm, combos, top_k)


def _summary(name, algorithm, combos, top_k):
    if not combos:
        raise ValueError(f"run {name} has no visited designs")
    ranked = sorted(combos.items(), key=lambda kv: -kv[1])[:top_k]
    top = [(mid, list(values), float(r)) for (mid, values), r in ranked]
    return RunSummary(name, algorithm, top, float(np.mean([r for _, _, r in top])))


def report_top_designs(run_logs, top_k=3):
    """Mean best episodic reward of each run's ``top_k`` designs, then mean and std across runs.

    ``run_logs`` holds run directories or in-memory run logs.
    """
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    runs = [_summarise_dir(r, top_k) if isinstance(r, (str, os.PathLike)) else _summarise_log(r, top_k) for r in run_logs]
    if not runs:
        raise ValueError("no runs to report")
    scores = np.array([r.score for r in runs])
    std = float(scores.std(ddof=1)) if len(scores) > 1 else 0.0
    return TopDesignReport(runs, float(scores.mean()), std)
