"""Forward diffusion: ``z(t + dt) = z(t) + sqrt(dt) eps`` with ``z(0) = y``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInterval, NegativeTime
from .rng import chunk_rngs

# Paths are simulated in blocks with their own streams so results do not
# depend on how blocks are scheduled.
PATH_BLOCK = 8192


@dataclass(frozen=True)
class Path:
    """A forward trajectory; ``states[n]`` is ``z(n * dt)``.

    ``states`` has shape ``(n_steps + 1, dim)`` for one path or
    ``(n_steps + 1, n_paths, dim)`` for a batch.
    """

    dt: float
    states: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.states))


def sample_zt(y, t: float, rng: np.random.Generator) -> np.ndarray:
    """Jump straight to time ``t``: ``y + sqrt(t) delta``.

    ``y`` may be one point ``(dim,)`` or a batch ``(n, dim)``; each row gets
    its own noise draw.
    """
    if not t >= 0:
        raise NegativeTime(f"t must be >= 0, got {t!r}")
    y = np.asarray(y, dtype=np.float64)
    if t == 0:
        return y.copy()
    return y + np.sqrt(t) * rng.standard_normal(y.shape)


def simulate_path(
    y, dt: float, n_steps: int, rng: np.random.Generator, n_paths: int | None = None
) -> Path:
    """Euler path of the forward SDE starting at ``y``.

    With ``n_paths`` set, simulates that many independent paths from the same
    start; the noise for each block of ``PATH_BLOCK`` paths comes from its own
    stream derived from ``rng``'s seed, so a given path index always sees the
    same noise.
    """
    if not dt > 0:
        raise InvalidInterval(f"dt must be > 0, got {dt!r}")
    if n_steps < 1:
        raise InvalidInterval(f"n_steps must be >= 1, got {n_steps}")
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    scale = np.sqrt(dt)
    if n_paths is None:
        eps = rng.standard_normal((n_steps,) + y.shape)
        increments = scale * eps
    else:
        n_blocks = -(-n_paths // PATH_BLOCK)
        blocks = []
        for b, r in enumerate(chunk_rngs(rng, n_blocks, "path")):
            size = min(PATH_BLOCK, n_paths - b * PATH_BLOCK)
            blocks.append(r.standard_normal((n_steps, size) + y.shape))
        increments = scale * np.concatenate(blocks, axis=1)
        y = np.broadcast_to(y, (n_paths,) + y.shape)
    states = np.concatenate([y[None], y[None] + np.cumsum(increments, axis=0)])
    return Path(float(dt), states)


@dataclass(frozen=True)
class ReversalMoments:
    empirical_mean: np.ndarray
    empirical_cov_diag: np.ndarray
    predicted_mean: np.ndarray
    mean_standard_error: np.ndarray
    predicted_variance: float


def conditional_reversal_moments(
    y, t: float, dt: float, n: int, rng: np.random.Generator
) -> ReversalMoments:
    """Empirical check of the one-step conditional reversal law given ``y``.

    Draws ``n`` pairs ``(z(t - dt), z(t))`` from the forward process started
    at ``y`` and regresses the earlier state on the later one. Returns:

    * ``empirical_mean``: mean of ``z(t-dt) - [z(t) + dt (y - z(t)) / t]``,
      which should vanish;
    * ``empirical_cov_diag``: per-coordinate variance of that residual,
      which should equal ``dt (1 - dt / t)`` (``dt`` to leading order);
    * ``predicted_mean``: mean of the predicted ``E[z(t-dt) | z(t), y]``.
    """
    if not (0 < dt < t):
        raise InvalidInterval(f"need 0 < dt < t, got dt={dt!r}, t={t!r}")
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    s = t - dt
    z_prev = y + np.sqrt(s) * rng.standard_normal((n,) + y.shape)
    z_t = z_prev + np.sqrt(dt) * rng.standard_normal((n,) + y.shape)
    predicted = z_t + dt * (y - z_t) / t
    resid = z_prev - predicted
    return ReversalMoments(
        empirical_mean=resid.mean(axis=0),
        empirical_cov_diag=resid.var(axis=0, ddof=1),
        predicted_mean=predicted.mean(axis=0),
        mean_standard_error=resid.std(axis=0, ddof=1) / np.sqrt(n),
        predicted_variance=dt * (1.0 - dt / t),
    )
