"""Global-best particle swarm optimisation in a box (maximisation)."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 80
    iterations: int = 50
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError("PSO needs at least two particles")
        if self.iterations < 1:
            raise ValueError("PSO needs at least one iteration")


@dataclass
class PsoResult:
    best: np.ndarray
    value: float
    history: np.ndarray  # global-best value after initialisation and after each iteration


def pso_optimize(evaluate_many, lower, upper, config, rng):
    """Maximise ``evaluate_many(X) -> (P,)`` over the box ``[lower, upper]``.

    Particles start uniform in the box with velocities uniform in
    ``±(upper - lower)``. A coordinate leaving the box is clamped to it and
    its velocity zeroed.
    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    span = upper - lower
    dim = lower.size
    n = config.particles
    x = rng.uniform(lower, upper, (n, dim))
    v = rng.uniform(-span, span, (n, dim))
    f = np.asarray(evaluate_many(x), dtype=np.float64)
    p_best, p_val = x.copy(), f.copy()
    g = int(np.argmax(p_val))
    g_best, g_val = p_best[g].copy(), float(p_val[g])
    history = [g_val]
    for _ in range(config.iterations):
        r1 = rng.random((n, dim))
        r2 = rng.random((n, dim))
        v = config.inertia * v + config.cognitive * r1 * (p_best - x) + config.social * r2 * (g_best - x)
        x = x + v
        out = (x < lower) | (x > upper)
        x = np.clip(x, lower, upper)
        v[out] = 0.0
        f = np.asarray(evaluate_many(x), dtype=np.float64)
        better = f > p_val
        p_best[better] = x[better]
        p_val[better] = f[better]
        g = int(np.argmax(p_val))
        if p_val[g] > g_val:
            g_best, g_val = p_best[g].copy(), float(p_val[g])
        history.append(g_val)
    return PsoResult(g_best, g_val, np.array(history))
