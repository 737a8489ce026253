"""Reverse-time samplers over a log-uniform time grid.

All three reverse processes share one update::

    z <- z + dt * (1 + lam) / 2 * (E[y|t,z] - z) / t + sqrt(lam * dt) * eps

``lam = 1`` is the reverse SDE, ``lam = 0`` the deterministic probability-flow
step, and any ``lam >= 0`` keeps the marginals ``p_t`` on track: the extra
drift ``lam / 2 * score`` exactly cancels the diffusion added by noise of
variance ``lam * dt``.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .denoiser import Denoiser
from .errors import InvalidInterval, InvalidRange, NegativeLambda, NonFiniteState
from .population import GaussianMixture, noised_mixture, responsibilities, sample
from .rng import make_rng

CHAIN_BLOCK = 16384


@dataclass(frozen=True)
class TimeGrid:
    """Geometric grid from ``T`` down to ``t0``; ``times[i] = T (t0/T)^(i/n)``."""

    t0: float
    T: float
    n_steps: int
    times: np.ndarray = field(repr=False, compare=False)

    @property
    def steps(self) -> np.ndarray:
        """Positive step sizes ``times[i] - times[i+1]``."""
        return self.times[:-1] - self.times[1:]

    def to_dict(self) -> dict:
        return {"t0": self.t0, "T": self.T, "n_steps": self.n_steps}


def make_grid(t0: float, T: float, n_steps: int) -> TimeGrid:
    if not (0 < t0 < T) or not np.isfinite(T):
        raise InvalidRange(f"need 0 < t0 < T, got t0={t0!r}, T={T!r}")
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidRange(f"n_steps must be a positive integer, got {n_steps!r}")
    n_steps = int(n_steps)
    times = T * (t0 / T) ** (np.arange(n_steps + 1) / n_steps)
    times[0], times[-1] = T, t0
    times.setflags(write=False)
    return TimeGrid(float(t0), float(T), n_steps, times)


class InitMode(str, enum.Enum):
    EXACT_NOISED = "exact_noised"
    WIDE_GAUSSIAN = "wide_gaussian"


@dataclass(frozen=True)
class PopulationStats:
    """What a sampler needs to know about a population it cannot evaluate.

    ``variance`` is the population variance averaged over coordinates.
    """

    mean: np.ndarray
    variance: float

    @classmethod
    def from_mixture(cls, m: GaussianMixture) -> "PopulationStats":
        return cls(m.mean, float(np.mean(m.coordinate_variances)))

    @classmethod
    def from_samples(cls, y) -> "PopulationStats":
        y = np.asarray(y, dtype=np.float64)
        return cls(y.mean(axis=0), float(np.mean(y.var(axis=0))))

    @property
    def dim(self) -> int:
        return len(self.mean)


@dataclass(frozen=True)
class SamplerConfig:
    grid: TimeGrid
    lam: float = 1.0
    n_chains: int = 10_000
    seed: int = 0
    init: InitMode = InitMode.EXACT_NOISED

    def __post_init__(self):
        if not self.lam >= 0:
            raise NegativeLambda(f"lambda must be >= 0, got {self.lam!r}")
        if self.n_chains < 1:
            raise InvalidRange(f"n_chains must be >= 1, got {self.n_chains}")
        object.__setattr__(self, "init", InitMode(self.init))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "lambda": self.lam,
            "n_chains": self.n_chains,
            "seed": self.seed,
            "init": self.init.value,
        }


def init_sample(
    m: Union[GaussianMixture, PopulationStats],
    T: float,
    mode: InitMode | str,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Starting points at time ``T``.

    ``exact_noised`` draws from the noised mixture itself and needs a
    :class:`GaussianMixture`. ``wide_gaussian`` draws from
    ``N(mean, (v + T) I)`` using only population mean and variance, which is
    all that is known when the population is given by samples.
    """
    mode = InitMode(mode)
    if not T > 0:
        raise InvalidRange(f"T must be > 0, got {T!r}")
    if mode is InitMode.EXACT_NOISED:
        if not isinstance(m, GaussianMixture):
            raise TypeError("exact_noised init needs a GaussianMixture")
        return sample(noised_mixture(m, T), n, rng)
    stats = m if isinstance(m, PopulationStats) else PopulationStats.from_mixture(m)
    scale = np.sqrt(stats.variance + T)
    return stats.mean + scale * rng.standard_normal((n, stats.dim))


def _check_step(t: float, dt: float) -> None:
    if not (0 < dt <= t):
        raise InvalidInterval(f"need 0 < dt <= t, got dt={dt!r}, t={t!r}")


def reverse_lambda_step(
    d: Denoiser, z, t: float, dt: float, lam: float, rng=None, noise=None
) -> np.ndarray:
    """One step from ``t`` to ``t - dt`` of the lambda-family reverse process.

    ``noise`` overrides the standard-normal draw (useful to force ``eps = 0``).
    """
    _check_step(t, dt)
    if not lam >= 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam!r}")
    z = np.asarray(z, dtype=np.float64)
    out = z + dt * (0.5 * (1.0 + lam)) * (d.posterior_mean(t, z) - z) / t
    if lam > 0:
        if noise is None:
            noise = rng.standard_normal(z.shape)
        out = out + np.sqrt(lam * dt) * noise
    return out


def reverse_sde_step(d: Denoiser, z, t: float, dt: float, rng=None, noise=None) -> np.ndarray:
    return reverse_lambda_step(d, z, t, dt, 1.0, rng, noise)


def reverse_ode_step(d: Denoiser, z, t: float, dt: float) -> np.ndarray:
    return reverse_lambda_step(d, z, t, dt, 0.0)


def integrate(
    d: Denoiser, z: np.ndarray, grid: TimeGrid, lam: float, rng: np.random.Generator
) -> np.ndarray:
    """Run the lambda-family update down the whole grid."""
    times = grid.times
    for i in range(grid.n_steps):
        t = float(times[i])
        z = reverse_lambda_step(d, z, t, t - float(times[i + 1]), lam, rng)
        if not np.all(np.isfinite(z)):
            raise NonFiniteState(f"non-finite state at t={t:g} (step {i})")
    return z


def sample_population(
    d: Denoiser,
    m_or_stats: Union[GaussianMixture, PopulationStats],
    cfg: SamplerConfig,
    threads: int = 1,
) -> np.ndarray:
    """Draw ``cfg.n_chains`` points at time ``t0`` by reverse integration.

    Chains run in blocks of ``CHAIN_BLOCK``; block ``b`` draws its initial
    points and noise from a stream derived from ``(cfg.seed, "sample", b)``,
    so the output depends only on the config, never on ``threads``.
    """
    n = cfg.n_chains
    sizes = [min(CHAIN_BLOCK, n - s) for s in range(0, n, CHAIN_BLOCK)]

    def run_block(b: int) -> np.ndarray:
        rng = make_rng(cfg.seed, "sample", b)
        z = init_sample(m_or_stats, cfg.grid.T, cfg.init, sizes[b], rng)
        return integrate(d, z, cfg.grid, cfg.lam, rng)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(run_block, range(len(sizes))))
    else:
        blocks = [run_block(b) for b in range(len(sizes))]
    return np.concatenate(blocks)


def sample_summary(z, m: GaussianMixture | None = None, t: float = 0.0) -> dict:
    """Moments of a sample with standard errors, plus mode masses when ``m`` is given.

    Mode masses are mean responsibilities under ``noised_mixture(m, t)``.
    """
    z = np.asarray(z, dtype=np.float64)
    n = len(z)
    mean = z.mean(axis=0)
    centered = z - mean
    var = centered.var(axis=0, ddof=1)
    # delta-method standard error of the sample variance
    var_se = np.sqrt(np.maximum((centered**2).var(axis=0, ddof=1), 0.0) / n)
    out = {
        "n": n,
        "mean": mean,
        "mean_se": np.sqrt(var / n),
        "variance": var,
        "variance_se": var_se,
    }
    if m is not None:
        r = responsibilities(noised_mixture(m, t), z)
        out["mode_masses"] = r.mean(axis=0)
        out["mode_masses_se"] = r.std(axis=0, ddof=1) / np.sqrt(n)
    return out


def target_summary(m: GaussianMixture, t: float) -> dict:
    """Closed-form mean, per-coordinate variance and mode masses of ``p_t``."""
    p = noised_mixture(m, t)
    return {
        "mean": p.mean,
        "variance": p.coordinate_variances,
        "mode_masses": p.weights,
    }
