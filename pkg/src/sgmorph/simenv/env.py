import csv
from dataclasses import dataclass

import numpy as np

from ..morphology import ENV_KINDS, build_catalog
from . import physics
from .terrain import Terrain, build_terrain

GLOBAL_OBS_DIM = 5
NODE_OBS_DIM = 2


class SimulationError(RuntimeError):
    """Integration produced non-finite state."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1.0 / 240.0
    action_repeat: int = 4
    episode_length: int = 600
    gravity: float = 9.81
    solver_iterations: int = 20
    baumgarte: float = 0.2
    contact_stiffness: float = 3.0e4
    contact_damping: float = 1.0e4
    friction: float = 1.0
    contact_margin: float = 0.05
    joint_stiffness: float = 180.0
    joint_damping: float = 4.5
    joint_range: float = 0.6
    limit_stiffness: float = 5.0e3
    limit_damping: float = 50.0
    line_density: float = 5.0
    torso_mass: float = 8.0
    torso_length: float = 1.0
    pitch_limit: float = 1.25
    init_noise: float = 0.005

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.episode_length != 600:
            raise ValueError("episodes are 600 control steps long")

    @property
    def control_dt(self):
        return self.dt * self.action_repeat


MAX_TORQUE = {"halfcheetah": 65.0, "crawler": 30.0, "multiped": 30.0, "multiped_stairs": 30.0}


@dataclass
class ArticulatedAgent:
    """Body and joint tables for one (graph, design). Body 0 is the torso."""

    graph: object
    design: object
    env_kind: str
    lengths: np.ndarray
    rest_angles: np.ndarray
    mass: np.ndarray
    inertia: np.ndarray
    joint_parent: np.ndarray
    joint_child: np.ndarray
    anchor_parent: np.ndarray
    anchor_child: np.ndarray
    contact_body: np.ndarray
    contact_local: np.ndarray
    max_torque: float

    @property
    def n_bodies(self):
        return self.mass.shape[0]

    @property
    def n_joints(self):
        return self.joint_parent.shape[0]

    @property
    def obs_dim(self):
        return GLOBAL_OBS_DIM + NODE_OBS_DIM * self.n_joints


def build_agent(graph, design, env_kind, config=None):
    """Construct mass/inertia/joint tables; raises ``ValueError`` for out-of-bounds designs."""
    config = config or SimConfig()
    if env_kind not in ENV_KINDS:
        raise ValueError(f"unknown env_kind {env_kind!r}")
    params = build_catalog(env_kind).params
    space = design.space
    if space.n_nodes != graph.n_nodes or space.params != params:
        raise ValueError("design does not belong to this graph/environment")
    if not space.contains(design.values):
        raise ValueError("design out of bounds")

    n = graph.n_nodes
    lengths = design.param("length").astype(np.float64)
    if "orientation" in [p.name for p in params]:
        rest = design.param("orientation").astype(np.float64)
    else:
        rest = np.array(graph.rest_angles, dtype=np.float64)

    mass = np.empty(n + 1)
    inertia = np.empty(n + 1)
    mass[0] = config.torso_mass
    inertia[0] = config.torso_mass * config.torso_length**2 / 12.0
    mass[1:] = config.line_density * lengths
    inertia[1:] = mass[1:] * lengths**2 / 12.0

    joint_parent = np.empty(n, dtype=np.int64)
    joint_child = np.arange(1, n + 1, dtype=np.int64)
    anchor_parent = np.zeros((n, 2))
    anchor_child = np.zeros((n, 2))
    for i in range(n):
        if graph.mounts[i] is not None:
            joint_parent[i] = 0
            anchor_parent[i] = (graph.mounts[i], 0.0)
        else:
            p = graph.parents[i]
            joint_parent[i] = p + 1
            anchor_parent[i] = (0.0, -0.5 * lengths[p])
        anchor_child[i] = (0.0, 0.5 * lengths[i])

    half = 0.5 * config.torso_length
    contact_body = np.concatenate([[0, 0], np.arange(1, n + 1)]).astype(np.int64)
    contact_local = np.vstack([[[-half, 0.0], [half, 0.0]], np.column_stack([np.zeros(n), -0.5 * lengths])])

    return ArticulatedAgent(
        graph=graph,
        design=design,
        env_kind=env_kind,
        lengths=lengths,
        rest_angles=rest,
        mass=mass,
        inertia=inertia,
        joint_parent=joint_parent,
        joint_child=joint_child,
        anchor_parent=anchor_parent,
        anchor_child=anchor_child,
        contact_body=contact_body,
        contact_local=contact_local,
        max_torque=MAX_TORQUE[env_kind],
    )


@dataclass
class StepCounter:
    """Counts environment control steps and episodes across every env sharing it."""

    steps: int = 0
    episodes: int = 0


def _rot(angle, v):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


class LocomotionEnv:
    """Planar locomotion task for one (graph, design).

    Observation: ``[height / reset_height, vx, pitch, pitch_rate, vz]`` followed
    by ``(joint angle - rest, joint velocity)`` per node in graph order.
    Reward: ``max(vx / 10, 0)``; ``-1`` and termination when ``|pitch| > 1.25``.
    """

    def __init__(self, graph, design, env_kind, config=None, terrain=None, counter=None, record=False):
        self.config = config or SimConfig()
        self.agent = build_agent(graph, design, env_kind, self.config)
        self.env_kind = env_kind
        self.terrain = terrain if terrain is not None else build_terrain(env_kind)
        self.counter = counter
        self.record = record
        self._inv_mass = 1.0 / self.agent.mass
        self._inv_inertia = 1.0 / self.agent.inertia
        self._torque = np.zeros(self.agent.n_joints)
        self._diag = np.zeros(1)
        self.pos = self.ang = self.vel = self.angvel = None
        self.t = 0
        self.done = True
        self.terminated = False
        self.trajectory = []

    @property
    def obs_dim(self):
        return self.agent.obs_dim

    @property
    def n_actions(self):
        return self.agent.n_joints

    @property
    def max_penetration(self):
        return float(self._diag[0])

    def reset(self, seed=None):
        rng = np.random.default_rng(seed)
        a = self.agent
        n = a.n_joints
        noise = rng.uniform(-self.config.init_noise, self.config.init_noise, n)
        pos = np.zeros((n + 1, 2))
        ang = np.zeros(n + 1)
        for i in a.graph.topological_order():
            p = a.joint_parent[i]
            c = a.joint_child[i]
            ang[c] = ang[p] + a.rest_angles[i] + noise[i]
            anchor = pos[p] + _rot(ang[p], a.anchor_parent[i])
            pos[c] = anchor - _rot(ang[c], a.anchor_child[i])
        lowest = np.inf
        for b, local in zip(a.contact_body, a.contact_local):
            pt = pos[b] + _rot(ang[b], local)
            lowest = min(lowest, pt[1] - self.terrain.height(pt[0]))
        pos[:, 1] -= lowest
        self.pos, self.ang = pos, ang
        self.vel = np.zeros((n + 1, 2))
        self.angvel = np.zeros(n + 1)
        self.reset_height = float(pos[0, 1])
        self.t = 0
        self.done = False
        self.terminated = False
        self._diag[0] = 0.0
        self.trajectory = []
        if self.counter is not None:
            self.counter.episodes += 1
        obs = self.observation()
        if self.record:
            self._log_row(0.0)
        return obs

    def joint_state(self):
        a = self.agent
        q = self.ang[a.joint_child] - self.ang[a.joint_parent] - a.rest_angles
        qd = self.angvel[a.joint_child] - self.angvel[a.joint_parent]
        return q, qd

    def observation(self):
        q, qd = self.joint_state()
        g = [self.pos[0, 1] / self.reset_height, self.vel[0, 0], self.ang[0], self.angvel[0], self.vel[0, 1]]
        return np.concatenate([g, np.column_stack([q, qd]).reshape(-1)])

    def step(self, action):
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        action = np.clip(np.asarray(action, dtype=np.float64).reshape(-1), -1.0, 1.0)
        if action.shape != (self.n_actions,):
            raise ValueError(f"expected {self.n_actions} actions, got {action.size}")
        cfg = self.config
        self._torque[:] = action * self.agent.max_torque
        x_before = self.pos[0, 0]
        physics.step_bodies(
            self.pos, self.ang, self.vel, self.angvel, self._inv_mass, self._inv_inertia,
            self.agent.joint_parent, self.agent.joint_child, self.agent.anchor_parent, self.agent.anchor_child,
            self.agent.rest_angles, self._torque,
            self.agent.contact_body, self.agent.contact_local, self.terrain.blocks,
            cfg.gravity, cfg.dt, cfg.action_repeat, cfg.solver_iterations, cfg.baumgarte,
            cfg.joint_stiffness, cfg.joint_damping, cfg.joint_range, cfg.limit_stiffness, cfg.limit_damping,
            cfg.contact_stiffness, cfg.contact_damping, cfg.friction, cfg.contact_margin,
            self._diag,
        )
        if not (np.isfinite(self.pos).all() and np.isfinite(self.vel).all() and np.isfinite(self.angvel).all()):
            self.done = True
            raise SimulationError(
                f"non-finite state at step {self.t} (design {self.agent.design.values.tolist()}, "
                f"graph {self.agent.graph.morphology_id})"
            )
        self.t += 1
        if self.counter is not None:
            self.counter.steps += 1
        vx = (self.pos[0, 0] - x_before) / cfg.control_dt
        reward = max(vx / 10.0, 0.0)
        done = False
        if abs(self.ang[0]) > cfg.pitch_limit:
            reward, done = -1.0, True
            self.terminated = True
        if self.t >= cfg.episode_length:
            done = True
        self.done = done
        if self.record:
            self._log_row(reward)
        return self.observation(), reward, done

    def mechanical_energy(self):
        """Kinetic + gravitational + elastic (joint, limit and contact springs) energy."""
        a, cfg = self.agent, self.config
        kinetic = 0.5 * np.sum(a.mass * np.sum(self.vel**2, axis=1)) + 0.5 * np.sum(a.inertia * self.angvel**2)
        potential = cfg.gravity * np.sum(a.mass * self.pos[:, 1])
        q, _ = self.joint_state()
        elastic = 0.5 * cfg.joint_stiffness * np.sum(q**2)
        excess = np.maximum(np.abs(q) - cfg.joint_range, 0.0)
        elastic += 0.5 * cfg.limit_stiffness * np.sum(excess**2)
        depths = physics.contact_depths(self.pos, self.ang, a.contact_body, a.contact_local, self.terrain.blocks)
        elastic += 0.5 * cfg.contact_stiffness * np.sum(depths**2)
        return float(kinetic + potential + elastic)

    def compliance_length(self):
        """Static penetration of one contact carrying the agent's whole weight."""
        return float(np.sum(self.agent.mass) * self.config.gravity / self.config.contact_stiffness)

    def _log_row(self, reward):
        q, _ = self.joint_state()
        self.trajectory.append([self.t, self.pos[0, 0], self.pos[0, 1], self.ang[0], *q.tolist(), reward, int(self.done)])

    def dump_trajectory(self, path):
        n = self.agent.n_joints
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "x", "z", "pitch", *[f"q{i}" for i in range(n)], "reward", "done"])
            for row in self.trajectory:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def rollout(env, policy, seed=None):
    """Run one episode with ``policy(obs) -> action``.

    Returns ``(transitions, episodic_reward)``. The stored done flag marks true
    terminations only; the 600-step time limit is not a terminal state.
    """
    obs = env.reset(seed)
    transitions = []
    total = 0.0
    done = False
    while not done:
        act = policy(obs)
        nxt, rew, done = env.step(act)
        transitions.append((obs, np.asarray(act, dtype=np.float64), rew, nxt, env.terminated))
        total += rew
        obs = nxt
    return transitions, total

