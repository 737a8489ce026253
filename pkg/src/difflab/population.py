"""Isotropic Gaussian-mixture populations and their noised marginals.

A population ``pop(y)`` is ``sum_k w_k N(y; mu_k, s_k I)``. Adding isotropic
Gaussian noise of variance ``t`` to a draw gives the marginal ``p_t(z)``, which
is again a mixture with every ``s_k`` replaced by ``s_k + t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    NegativeTime,
    NonPositiveVariance,
    NonPositiveWeight,
    WeightSumMismatch,
)

LOG_2PI = float(np.log(2.0 * np.pi))
WEIGHT_SUM_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite mixture of isotropic Gaussians in ``dim`` dimensions.

    Attributes:
        dim: Dimension of each point.
        weights: Component probabilities, shape ``(K,)``, summing to one.
        means: Component means, shape ``(K, dim)``.
        variances: Per-component isotropic variances, shape ``(K,)``.

    Instances are immutable; build them with :func:`mixture_new`.
    """

    dim: int
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def mean(self) -> np.ndarray:
        """Population mean ``sum_k w_k mu_k``."""
        return self.weights @ self.means

    @property
    def coordinate_variances(self) -> np.ndarray:
        """Per-coordinate population variance, shape ``(dim,)``."""
        second = self.weights @ (self.means**2 + self.variances[:, None])
        return second - self.mean**2

    @property
    def second_moment(self) -> float:
        """``E ||y||^2`` under the population."""
        return float(self.weights @ (np.sum(self.means**2, axis=1) + self.dim * self.variances))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianMixture):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.variances, other.variances)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }


def mixture_new(
    dim: int,
    weights: Sequence[float],
    means: Sequence[Sequence[float]],
    variances: Sequence[float],
) -> GaussianMixture:
    """Validate and build a :class:`GaussianMixture`.

    Weights are renormalized when their sum is within ``1e-9`` of one;
    larger discrepancies raise :class:`WeightSumMismatch`.
    """
    if int(dim) != dim or dim < 1:
        raise DimensionMismatch(f"dim must be a positive integer, got {dim!r}")
    dim = int(dim)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    v = np.asarray(variances, dtype=np.float64).reshape(-1)
    try:
        mu = np.asarray(means, dtype=np.float64)
    except ValueError as exc:  # ragged input
        raise DimensionMismatch(f"means are ragged: {exc}") from None
    if mu.ndim == 1 and dim == 1:
        mu = mu[:, None]
    if len(w) == 0:
        raise DimensionMismatch("a mixture needs at least one component")
    if mu.ndim != 2 or mu.shape[1] != dim:
        raise DimensionMismatch(f"means must have shape (K, {dim}), got {mu.shape}")
    if not (len(w) == len(mu) == len(v)):
        raise DimensionMismatch(
            f"weights, means, variances lengths differ: {len(w)}, {len(mu)}, {len(v)}"
        )
    if not np.all(np.isfinite(mu)):
        raise DimensionMismatch("means must be finite")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise NonPositiveWeight(f"weights must be positive, got {w.tolist()}")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise NonPositiveVariance(f"variances must be positive, got {v.tolist()}")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumMismatch(f"weights sum to {total!r}, expected 1")
    return GaussianMixture(dim, _frozen(w / total), _frozen(mu), _frozen(v))


def as_points(m: GaussianMixture | int, y) -> np.ndarray:
    """Coerce ``y`` to a float array whose last axis has length ``m.dim``.

    A bare scalar is accepted for one-dimensional mixtures.
    """
    dim = m if isinstance(m, int) else m.dim
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim == 0:
        if dim != 1:
            raise DimensionMismatch(f"scalar point given for a {dim}-d mixture")
        arr = arr.reshape(1)
    if arr.shape[-1] != dim:
        raise DimensionMismatch(f"points have last axis {arr.shape[-1]}, expected {dim}")
    return arr


def component_log_densities(m: GaussianMixture, y) -> np.ndarray:
    """``log w_k + log N(y; mu_k, s_k I)`` for every component; shape ``(..., K)``."""
    y = as_points(m, y)
    sq = np.sum((y[..., None, :] - m.means) ** 2, axis=-1)
    return (
        np.log(m.weights) - 0.5 * m.dim * (LOG_2PI + np.log(m.variances)) - 0.5 * sq / m.variances
    )


def log_density(m: GaussianMixture, y):
    """``ln pop(y)``, evaluated with log-sum-exp.

    Returns a float for a single point and an array for a batch of shape
    ``(..., dim)``.
    """
    out = logsumexp(component_log_densities(m, y), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def responsibilities(m: GaussianMixture, y) -> np.ndarray:
    """Posterior component probabilities given ``y``; shape ``(..., K)``."""
    lc = component_log_densities(m, y)
    return np.exp(lc - logsumexp(lc, axis=-1, keepdims=True))


def noised_mixture(m: GaussianMixture, t: float) -> GaussianMixture:
    """Law of ``y + sqrt(t) delta`` for ``y ~ m``: every variance grows by ``t``."""
    if not t >= 0:
        raise NegativeTime(f"t must be >= 0, got {t!r}")
    if t == 0:
        return m
    return GaussianMixture(m.dim, m.weights, m.means, _frozen(m.variances + t))


def sample(m: GaussianMixture, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. points, shape ``(n, dim)``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = rng.choice(m.n_components, size=n, p=m.weights)
    noise = rng.standard_normal((n, m.dim))
    return m.means[k] + np.sqrt(m.variances[k])[:, None] * noise


def mode_masses(m: GaussianMixture, z, t: float = 0.0) -> np.ndarray:
    """Empirical component masses of ``z`` measured against ``p_t``.

    Each point contributes its responsibility vector under
    ``noised_mixture(m, t)``. For ``z ~ p_t`` the expectation is exactly the
    mixture weights, so this is an unbiased mode-mass estimator even when
    components overlap.
    """
    return responsibilities(noised_mixture(m, t), z).mean(axis=0)


# Benchmarks used throughout tests, demos and the CLI.


def standard_normal(dim: int = 1) -> GaussianMixture:
    return mixture_new(dim, [1.0], [[0.0] * dim], [1.0])


def bimodal(dim: int = 1, separation: float = 2.0, variance: float = 0.25) -> GaussianMixture:
    """Two equal-weight modes at ``(-separation, 0, ...)`` and ``(+separation, 0, ...)``."""
    left = [-separation] + [0.0] * (dim - 1)
    right = [separation] + [0.0] * (dim - 1)
    return mixture_new(dim, [0.5, 0.5], [left, right], [variance, variance])
