"""The co-adaptation loop and its baseline variants.

A run visits a fixed initial pool of designs, then alternates exploitation
cycles (rank every graph by its optimised surrogate score and draw one by
log-rank) with exploration cycles (uniform graph and design). Every visit
trains a fresh specialist on its own buffer while the generalist trains on
all buffers.

Randomness is drawn per visit from ``default_rng([seed, visit])``, so runs
that share a seed share every visit until their algorithms first differ.
"""

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..design_opt import (
    DesignObjective,
    PsoConfig,
    initial_state_batch,
    rank_candidates,
    random_morphology_selection,
    select_morphology,
    write_ranking,
)
from ..graph_rl import GnnConfig, GnnSac, PredictorNet, gnn_train_iterations, pretrain_specialist, relabel_states
from ..graph_rl.transfer import NoMatchingGraphError
from ..morphology import Design, build_catalog, sample_random_design
from ..rl import MlpSac, ReplayBuffer, ReplayBufferSet, SacConfig, mlp_train_iterations
from ..simenv import LocomotionEnv, StepCounter, rollout
from .config import ALGORITHMS, ConfigError, save_config
from .logs import GNN, GNN_EVAL, MLP, CycleRecord, RunWriter, read_csv, truncate_rows, write_designs

_INIT_STREAM = 1_000_003
_PLAN_STREAM = 1_000_033
CHECKPOINT_VERSION = 1


class RunAborted(RuntimeError):
    """A module error stopped the run; the logs written so far are intact."""


@dataclass
class RunLog:
    config: object
    run_dir: str
    records: list = field(default_factory=list)
    training_episodes: int = 0
    training_steps: int = 0
    eval_episodes: int = 0
    eval_steps: int = 0
    status: str = "running"

    @property
    def ranking_env_steps(self):
        return sum(r.design_opt_env_steps for r in self.records)


def morphology_pool(config):
    pool = build_catalog(config.env_kind)
    if config.morphologies is not None:
        try:
            pool = pool.subset(config.morphologies)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    return pool


def cycle_schedule(config):
    """Modes of the post-initial cycles: exploit first, then alternating."""
    if config.algorithm == "random":
        return ["explore"] * config.n_cycles
    modes = []
    exploit, explore = config.exploit_cycles, config.explore_cycles
    while exploit or explore:
        if exploit:
            modes.append("exploit")
            exploit -= 1
        if explore:
            modes.append("explore")
            explore -= 1
    return modes


def initial_pool_plan(config, pool):
    """``initial_designs_per_morphology`` uniform designs per graph, in catalog order."""
    rng = np.random.default_rng([config.seed, _PLAN_STREAM])
    plan = []
    for graph in pool:
        for _ in range(config.initial_designs_per_morphology):
            plan.append((graph, sample_random_design(pool.design_space(graph), rng)))
    return plan


def closed_form_episodes(config, pool_size):
    return (
        pool_size * config.initial_designs_per_morphology * config.initial_episodes_per_design
        + config.n_cycles * config.episodes_per_selected_design
    )


def gnn_config(config):
    return GnnConfig(
        hidden_layers=tuple(config.gnn_hidden_layers),
        hidden_size=config.gnn_hidden_size,
        message_size=config.gnn_message_size,
        rounds=config.gnn_rounds,
        lr=config.gnn_lr,
        batch_per_graph=config.gnn_batch_per_graph,
        graphs_per_batch=config.buffers_per_gnn_batch,
    )


class CoAdaptationRun:
    """State of one run. ``execute`` performs it; ``resume=True`` continues a checkpoint."""

    def __init__(self, config, run_dir=None):
        self.config = config
        self.run_dir = run_dir or config.output_dir
        self.pool = morphology_pool(config)
        self.params = self.pool.params
        self.plan = initial_pool_plan(config, self.pool)
        self.schedule = cycle_schedule(config)
        self.gnn = GnnSac(len(self.params), np.random.default_rng([config.seed, _INIT_STREAM]), gnn_config(config))
        self.buffers = ReplayBufferSet(config.replay_capacity)
        self.train_counter = StepCounter()
        self.eval_counter = StepCounter()
        self.initial_states = {}
        self.records = []
        self.predictor = None
        self.predictor_data = []
        if config.algorithm == "gnn_predictor":
            self.predictor = PredictorNet(len(self.params), np.random.default_rng([config.seed, _INIT_STREAM, 1]), gnn_config(config))
        self.writer = None
        self.ranking_calls = 0

    # --- properties of the schedule ------------------------------------------------------

    @property
    def n_visits(self):
        return len(self.plan) + len(self.schedule)

    @property
    def uses_specialist(self):
        return self.config.algorithm != "gnn_only"

    def gnn_training_active(self, visits_done):
        if not self.uses_specialist:
            return True
        return visits_done >= math.ceil(len(self.plan) / 2)

    # --- top level -----------------------------------------------------------------------

    def execute(self, resume=False):
        start = 0
        if resume:
            start = self._restore()
        self.writer = RunWriter(self.run_dir, resume=start > 0)
        save_config(self.config, self.writer.path("config.json"))
        self.writer.status("running", visits_done=start, visits_total=self.n_visits)
        try:
            for visit in range(start, self.n_visits):
                self._do_visit(visit)
            self.gnn.save(self.writer.path("snapshots", "gnn_final.npz"))
        except Exception as exc:
            self.writer.status("aborted", error=f"{type(exc).__name__}: {exc}", visits_done=len(self.records))
            self.writer.close()
            raise RunAborted(f"run aborted at visit {len(self.records)}: {exc}") from exc
        self.writer.status("complete", visits_done=self.n_visits, visits_total=self.n_visits)
        self.writer.close()
        return self.log("complete")

    def log(self, status):
        return RunLog(
            self.config,
            self.run_dir,
            list(self.records),
            self.train_counter.episodes,
            self.train_counter.steps,
            self.eval_counter.episodes,
            self.eval_counter.steps,
            status,
        )

    # --- choosing what to build ----------------------------------------------------------------

    def _objective_factory(self, rng):
        if self.config.algorithm == "gnn_predictor":
            predictor = self.predictor

            def factory(graph):
                space = self.pool.design_space(graph)
                return lambda x: predictor.evaluate_many(graph, [Design(space, row) for row in x])

            return factory

        def factory(graph):
            states = initial_state_batch(self.buffers, graph, self.config.objective_states, rng)
            return DesignObjective(self.gnn, graph, self.pool.design_space(graph), states).evaluate_many

        return factory

    def _choose(self, visit, cycle, mode, rng):
        """Returns ``(graph, design, estimated objective, env steps spent choosing)``."""
        if mode == "explore":
            graph, design = random_morphology_selection(list(self.pool), self.pool.design_space, rng)
            return graph, design, None, 0
        before = self.train_counter.steps + self.eval_counter.steps
        pso = PsoConfig(particles=self.config.pso_particles, iterations=self.config.pso_iterations)
        ranked = rank_candidates(list(self.pool), self._objective_factory(rng), self.pool.design_space, pso, rng)
        self.ranking_calls += 1
        write_ranking(self.writer.path(f"ranking_cycle{cycle:03d}.json"), ranked, cycle)
        chosen = select_morphology(ranked, rng)
        spent = self.train_counter.steps + self.eval_counter.steps - before
        return chosen.graph, chosen.design, chosen.objective, spent

    # --- one visit ---------------------------------------------------------------------

    def _do_visit(self, visit):
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, visit])
        t0 = time.perf_counter()
        n_initial = len(self.plan)
        if visit < n_initial:
            cycle, mode = -1, "initial"
            graph, design = self.plan[visit]
            estimate, spent = None, 0
            episodes = cfg.initial_episodes_per_design
        else:
            cycle = visit - n_initial
            mode = self.schedule[cycle]
            graph, design, estimate, spent = self._choose(visit, cycle, mode, rng)
            episodes = cfg.episodes_per_selected_design
        record = CycleRecord(visit, cycle, mode, graph, design, estimate, design_opt_env_steps=spent)

        env = LocomotionEnv(graph, design, cfg.env_kind, counter=self.train_counter)
        buf = self.buffers.get_or_create(graph, design, env.obs_dim, env.n_actions)

        sac = None
        if self.uses_specialist:
            sac = MlpSac(
                env.obs_dim,
                env.n_actions,
                rng,
                SacConfig(hidden=tuple(cfg.mlp_hidden), lr=cfg.mlp_lr, batch_size=cfg.mlp_batch_size),
            )
            if mode != "initial" and cfg.algorithm != "no_transfer":
                self._pretrain(record, sac, graph, design, rng)

        if sac is not None:
            def policy(obs):
                return sac.act(obs, rng=rng)

            kind = MLP
        else:
            def policy(obs):
                return self.gnn.act(graph, design, obs, rng=rng)

            kind = GNN

        eval_env = None
        if self.uses_specialist and cfg.gnn_eval_every:
            eval_env = LocomotionEnv(graph, design, cfg.env_kind, counter=self.eval_counter)

        train_gnn = self.gnn_training_active(visit)
        for episode in range(episodes):
            transitions, total = rollout(env, policy, seed=int(rng.integers(2**31)))
            total = float(total)
            buf.add_episode(transitions)
            self.initial_states.setdefault(graph.morphology_id, []).append(transitions[0][0])
            record.rewards.append(total)
            self.writer.episode(visit, cycle, episode, kind, total)
            if sac is not None:
                mlp_train_iterations(buf, sac, cfg.mlp_iterations_per_episode, rng)
            if train_gnn:
                gnn_train_iterations(self.buffers, self.gnn, cfg.gnn_iterations_per_episode, rng, current_key=buf.key)
            if eval_env is not None and (episode + 1) % cfg.gnn_eval_every == 0:
                _, score = rollout(
                    eval_env,
                    lambda obs: self.gnn.act(graph, design, obs, deterministic=True),
                    seed=int(rng.integers(2**31)),
                )
                record.gnn_eval_rewards.append(float(score))
                self.writer.episode(visit, cycle, episode, GNN_EVAL, score)

        if self.predictor is not None:
            self.predictor_data.append((graph, design, record.best_reward))
            self.predictor.train(self.predictor_data, cfg.predictor_iterations, rng)

        record.wall_seconds = time.perf_counter() - t0
        self.records.append(record)
        self.writer.cycle(record)
        write_designs(self.writer.path("designs.json"), self.records, self.params)
        self._save_initial_states()
        if cycle >= 0 and cfg.snapshot_every and (cycle + 1) % cfg.snapshot_every == 0:
            self.gnn.save(self.writer.path("snapshots", f"gnn_cycle{cycle:03d}.npz"))
        self._checkpoint(visit, buf)
        self.writer.status("running", visits_done=visit + 1, visits_total=self.n_visits)

    def _pretrain(self, record, sac, graph, design, rng):
        cfg = self.config
        try:
            dataset = relabel_states(self.buffers, graph, design, cfg.relabel_count, rng)
        except NoMatchingGraphError:
            return
        history = pretrain_specialist(
            dataset, self.gnn, sac, cfg.pretrain_iterations, rng, batch_size=cfg.pretrain_batch_size, lr=cfg.pretrain_lr
        )
        record.pretrain_kl, record.pretrain_value = history[-1]

    # --- persistence -----------------------------------------------------------------------

    def _save_initial_states(self):
        arrays = {k: np.array(v) for k, v in self.initial_states.items()}
        np.savez(self.writer.path("initial_states.npz"), **arrays)

    def _checkpoint(self, visit, buf):
        root = self.writer.path("checkpoint")
        os.makedirs(os.path.join(root, "buffers"), exist_ok=True)
        index = self.buffers.keys().index(buf.key)
        buf.save(os.path.join(root, "buffers", f"{index:04d}.npz"))
        self.gnn.save(os.path.join(root, "gnn.npz"))
        state = {
            "version": CHECKPOINT_VERSION,
            "visits_done": visit + 1,
            "n_buffers": len(self.buffers),
            "training_episodes": self.train_counter.episodes,
            "training_steps": self.train_counter.steps,
            "eval_episodes": self.eval_counter.episodes,
            "eval_steps": self.eval_counter.steps,
        }
        tmp = os.path.join(root, "state.json.tmp")
        with open(tmp, "w") as fh:
            json.dump(state, fh, indent=2)
        os.replace(tmp, os.path.join(root, "state.json"))

    def _restore(self):
        """Reload the last checkpoint; returns the number of completed visits (0 if none)."""
        root = os.path.join(self.run_dir, "checkpoint")
        state_path = os.path.join(root, "state.json")
        if not os.path.exists(state_path):
            return 0
        with open(state_path) as fh:
            state = json.load(fh)
        if state.get("version") != CHECKPOINT_VERSION:
            raise RunAborted(f"unsupported checkpoint version {state.get('version')}")
        done = int(state["visits_done"])
        for k in range(int(state["n_buffers"])):
            self.buffers.insert(ReplayBuffer.load(os.path.join(root, "buffers", f"{k:04d}.npz")))
        self.gnn.load(os.path.join(root, "gnn.npz"))
        self.train_counter = StepCounter(state["training_steps"], state["training_episodes"])
        self.eval_counter = StepCounter(state["eval_steps"], state["eval_episodes"])

        truncate_rows(os.path.join(self.run_dir, "cycles.csv"), lambda v: v < done)
        truncate_rows(os.path.join(self.run_dir, "episodes.csv"), lambda v: v < done)
        self.records = self._records_from_logs(done)

        states_path = os.path.join(self.run_dir, "initial_states.npz")
        if os.path.exists(states_path):
            with np.load(states_path) as z:
                self.initial_states = {k: list(z[k]) for k in z.files}
        if self.predictor is not None:
            self.predictor_data = [(r.graph, r.design, r.best_reward) for r in self.records]
            self.predictor.train(self.predictor_data, self.config.predictor_iterations, np.random.default_rng([self.config.seed, done, 1]))
        return done

    def _records_from_logs(self, done):
        from .logs import read_designs

        designs = {v: (g, d) for v, g, d in read_designs(os.path.join(self.run_dir, "designs.json"))}
        episodes = read_csv(os.path.join(self.run_dir, "episodes.csv"))
        records = []
        for row in read_csv(os.path.join(self.run_dir, "cycles.csv")):
            visit = int(row["visit"])
            graph, design = designs[visit]
            graph = self.pool.by_id(graph.morphology_id)
            design = Design(self.pool.design_space(graph), design.values)
            est = float(row["estimated_objective"]) if row["estimated_objective"] else None
            rec = CycleRecord(visit, int(row["cycle"]), row["mode"], graph, design, est)
            rec.design_opt_env_steps = int(row["design_opt_env_steps"])
            for e in episodes:
                if int(e["visit"]) == visit:
                    target = rec.gnn_eval_rewards if e["policy_kind"] == GNN_EVAL else rec.rewards
                    target.append(float(e["episodic_reward"]))
            records.append(rec)
        if len(records) != done:
            raise RunAborted(f"checkpoint lists {done} visits but the logs hold {len(records)}")
        return records


def run_sg_morph(config, run_dir=None, resume=False):
    """Run the configured algorithm; ``config.algorithm`` selects SG-MOrph or a baseline."""
    return CoAdaptationRun(config, run_dir).execute(resume=resume)


def run_baseline(config, algorithm=None, run_dir=None, resume=False):
    if algorithm is not None:
        config = config.with_overrides(algorithm=algorithm)
    if config.algorithm not in ALGORITHMS or config.algorithm == "sg_morph":
        raise ConfigError(f"not a baseline: {config.algorithm!r}")
    return run_sg_morph(config, run_dir, resume)
