"""Diffusion models on isotropic Gaussian mixtures, with closed-form oracles.

Submodules:
    population: mixtures, sampling, densities and the forward-noised family.
    forward: the forward diffusion ``z(t) = y + sqrt(t) delta`` and its reversal.
    denoiser: the ``E[y | t, z]`` protocol, the exact oracle and the score.
    network: a small MLP denoiser with manual backprop and JSON persistence.
    sampler: the lambda family of reverse-time samplers.
    likelihood: NLL, entropy and mutual information from denoiser errors.
    diagnostics: numerical self-checks.
    cli: the ``difflab`` command.
"""

__version__ = "0.1.0"

from .denoiser import Denoiser, OracleDenoiser, mmse, oracle_posterior_mean, score
from .errors import DiffLabError, NonFiniteError
from .likelihood import (
    QuadratureSpec,
    TailMode,
    entropy_estimate,
    mutual_information,
    nll,
)
from .network import MLP, TrainedDenoiser, train_denoiser
from .population import (
    GaussianMixture,
    bimodal,
    log_density,
    mixture_new,
    noised_mixture,
    sample,
    standard_normal,
)
from .rng import make_rng
from .sampler import InitMode, SamplerConfig, make_grid, sample_population

__all__ = [
    "Denoiser",
    "DiffLabError",
    "GaussianMixture",
    "InitMode",
    "MLP",
    "NonFiniteError",
    "OracleDenoiser",
    "QuadratureSpec",
    "SamplerConfig",
    "TailMode",
    "TrainedDenoiser",
    "bimodal",
    "entropy_estimate",
    "log_density",
    "make_grid",
    "make_rng",
    "mixture_new",
    "mmse",
    "mutual_information",
    "nll",
    "noised_mixture",
    "oracle_posterior_mean",
    "sample",
    "sample_population",
    "score",
    "standard_normal",
    "train_denoiser",
]
