"""Posterior-mean denoisers ``E[y | t, z]`` and the score they induce.

Anything with a ``posterior_mean(t, z)`` method satisfies the :class:`Denoiser`
protocol. ``z`` has shape ``(..., dim)``; ``t`` is a positive scalar or an
array broadcastable against ``z.shape[:-1]``.
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import logsumexp

from .errors import NonPositiveTime
from .population import LOG_2PI, GaussianMixture, as_points, sample


@runtime_checkable
class Denoiser(Protocol):
    dim: int

    def posterior_mean(self, t, z) -> np.ndarray: ...


def check_positive_time(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if not np.all(t > 0):
        raise NonPositiveTime(f"t must be > 0, got {t!r}")
    return t


class OracleDenoiser:
    """Exact ``E[y | t, z]`` for a Gaussian-mixture population.

    For ``z = y + sqrt(t) delta`` each component is a conjugate Gaussian pair,
    so the posterior mean is a responsibility-weighted average of
    ``(t mu_k + s_k z) / (s_k + t)``, with responsibilities taken under the
    noised mixture.
    """

    def __init__(self, mixture: GaussianMixture):
        self.mixture = mixture
        self.dim = mixture.dim

    def _component_terms(self, t, z):
        # Component axis leads so reductions over it run along contiguous rows.
        m = self.mixture
        shape = (-1,) + (1,) * (z.ndim - 1)
        s = m.variances.reshape(shape)
        var = s + t
        if m.dim == 1:
            sq = (z[..., 0] - m.means[:, 0].reshape(shape)) ** 2
        else:
            sq = np.stack([np.sum((z - mu) ** 2, axis=-1) for mu in m.means])
        log_c = (
            np.log(m.weights).reshape(shape)
            - 0.5 * m.dim * (LOG_2PI + np.log(var))
            - 0.5 * sq / var
        )
        return s, var, log_c

    def posterior_mean(self, t, z) -> np.ndarray:
        z = as_points(self.mixture, z)
        t = check_positive_time(t)
        s, var, log_r = self._component_terms(t, z)
        log_r -= log_r.max(axis=0)
        r = np.exp(log_r)
        r /= r.sum(axis=0)
        # sum_k r_k (t mu_k + s_k z) / (s_k + t)
        a = r * t / var
        b = np.sum(r * s / var, axis=0)
        return np.tensordot(a, self.mixture.means, axes=(0, 0)) + b[..., None] * z

    def log_marginal(self, t, z):
        """``ln p_t(z)``; used by finite-difference checks."""
        z = as_points(self.mixture, z)
        _, _, log_c = self._component_terms(np.asarray(t, dtype=np.float64), z)
        out = logsumexp(log_c, axis=0)
        return float(out) if np.ndim(out) == 0 else out


def oracle_posterior_mean(m: GaussianMixture, t, z) -> np.ndarray:
    return OracleDenoiser(m).posterior_mean(t, z)


def score(d: Denoiser, t, z) -> np.ndarray:
    """``grad_z ln p_t(z) = (E[y|t,z] - z) / t``."""
    t = check_positive_time(t)
    z = np.asarray(z, dtype=np.float64)
    tt = t[..., None] if t.ndim else t
    return (d.posterior_mean(t, z) - z) / tt


def squared_errors(
    m: GaussianMixture, d: Denoiser, t, n: int, rng: np.random.Generator
) -> np.ndarray:
    """``||y - d(t, z)||^2`` for ``n`` joint draws of ``(y, z(t))``."""
    t = check_positive_time(t)
    y = sample(m, n, rng)
    tt = t[..., None] if t.ndim else t
    z = y + np.sqrt(tt) * rng.standard_normal(y.shape)
    return np.sum((y - d.posterior_mean(t, z)) ** 2, axis=-1)


def mmse(m: GaussianMixture, d: Denoiser, t: float, n: int, rng: np.random.Generator) -> float:
    """Monte Carlo ``E ||y - E_d[y | t, z(t)]||^2`` over ``n`` joint draws."""
    return float(squared_errors(m, d, t, n, rng).mean())
