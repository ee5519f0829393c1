"""Diagonal Gaussian utilities for tanh-squashed stochastic policies.

Distributions are batched: ``mean`` and ``log_std`` are ``(batch, dim)``
tensors, and per-sample quantities come back as ``(batch, 1)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class DiagonalGaussian:
    mean: ad.Tensor
    log_std: ad.Tensor

    def __post_init__(self):
        if self.mean.shape != self.log_std.shape:
            raise ad.ShapeError(f"mean {self.mean.shape} and log_std {self.log_std.shape} differ")

    @classmethod
    def from_head(cls, mean, raw_log_std):
        """Build from network outputs, clamping log_std to the allowed range."""
        return cls(mean, ad.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX))

    @property
    def dim(self):
        return self.mean.shape[1]


def gaussian_sample_reparam(dist, noise):
    """``mean + exp(log_std) * noise``, differentiable w.r.t. both parameters."""
    noise = ad.as_tensor(noise)
    if noise.shape != dist.mean.shape:
        raise ad.ShapeError(f"noise {noise.shape} does not match mean {dist.mean.shape}")
    return dist.mean + ad.exp(dist.log_std) * noise


def gaussian_log_prob(dist, x):
    z = (ad.as_tensor(x) - dist.mean) / ad.exp(dist.log_std)
    per_dim = ad.neg(ad.square(z) * 0.5 + dist.log_std + _HALF_LOG_2PI)
    return ad.sum(per_dim, axis=1)


def squash_correction(pre_squash):
    """Per-sample ``sum_i log(1 - tanh(u_i)^2 + eps)``."""
    t = ad.tanh(pre_squash)
    return ad.sum(ad.log(1.0 - ad.square(t) + SQUASH_EPS), axis=1)


def tanh_gaussian_logprob(dist, pre_squash_sample):
    """Log-density of ``tanh(u)`` where ``u`` was drawn from ``dist``."""
    return gaussian_log_prob(dist, pre_squash_sample) - squash_correction(pre_squash_sample)


def gaussian_kl(p, q):
    """Closed-form ``KL(p || q)`` summed over dimensions, one value per row."""
    if p.mean.shape != q.mean.shape:
        raise ad.ShapeError(f"KL between shapes {p.mean.shape} and {q.mean.shape}")
    var_ratio = ad.exp(2.0 * (p.log_std - q.log_std))
    mean_term = ad.square((p.mean - q.mean) / ad.exp(q.log_std))
    per_dim = (q.log_std - p.log_std) + 0.5 * (var_ratio + mean_term - 1.0)
    return ad.sum(per_dim, axis=1)


def gaussian_kl_np(mean_p, log_std_p, mean_q, log_std_q):
    """Array version of :func:`gaussian_kl` for evaluation without a tape."""
    var_ratio = np.exp(2.0 * (log_std_p - log_std_q))
    mean_term = ((mean_p - mean_q) / np.exp(log_std_q)) ** 2
    return np.sum((log_std_q - log_std_p) + 0.5 * (var_ratio + mean_term - 1.0), axis=-1)
