from . import autodiff
from .autodiff import ShapeError, Tape, Tensor, parameter
from .distributions import (
    DiagonalGaussian,
    gaussian_kl,
    gaussian_log_prob,
    gaussian_sample_reparam,
    tanh_gaussian_logprob,
)
from .optim import Adam
from .pca import PcaResult, pca_top2

__all__ = [
    "Adam",
    "DiagonalGaussian",
    "PcaResult",
    "ShapeError",
    "Tape",
    "Tensor",
    "autodiff",
    "gaussian_kl",
    "gaussian_log_prob",
    "gaussian_sample_reparam",
    "parameter",
    "pca_top2",
    "tanh_gaussian_logprob",
]
