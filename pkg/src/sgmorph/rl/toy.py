"""A one-dimensional control task with a known optimum, for checking the learner."""

import numpy as np


class VelocityTargetTask:
    """Drive a velocity ``v`` to ``target`` with ``v' = v + gain * a``.

    Reward ``max(0, 1 - 2 |v' - target|)`` per step; episodes have fixed
    length and start from ``v = 0``.
    """

    obs_dim = 1
    n_actions = 1

    def __init__(self, target=0.5, gain=0.1, horizon=20):
        self.target = target
        self.gain = gain
        self.horizon = horizon
        self.v = 0.0
        self.t = 0

    def reset(self, seed=None):
        self.v = 0.0
        self.t = 0
        return np.array([self.v])

    def step(self, action):
        a = float(np.clip(np.asarray(action).reshape(-1)[0], -1.0, 1.0))
        self.v += self.gain * a
        self.t += 1
        reward = max(0.0, 1.0 - 2.0 * abs(self.v - self.target))
        return np.array([self.v]), reward, self.t >= self.horizon

    def optimal_return(self):
        """Full-throttle until the target is reached, then hold."""
        v, total = 0.0, 0.0
        for _ in range(self.horizon):
            v = min(v + self.gain, self.target) if v < self.target else v
            total += max(0.0, 1.0 - 2.0 * abs(v - self.target))
        return total
