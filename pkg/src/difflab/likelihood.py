"""Non-variational likelihood, entropy and mutual-information integrals.

For ``z(t) = y + sqrt(t) delta``::

    -ln pop(y) = int_{t0}^inf E_{z(t)|y} ||y - E[y|t,z]||^2 / (2 t^2) dt
                 + E_{z(t0)|y} [-ln p(y | z(t0))]

    I(y; z(t0)) = int_{t0}^inf mmse(t) / (2 t^2) dt

Integrals are taken with the trapezoid rule in ``u = ln t`` (integrand times
``t``) on a geometric grid, with Monte Carlo inner expectations. The part of
the integral beyond the grid's ``T`` is either dropped or replaced by its
large-``t`` limit ``c / (2T)``, where ``c`` is the numerator's limit once
``E[y|t,z]`` has collapsed to the population mean.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .denoiser import Denoiser, check_positive_time
from .errors import NonFiniteState
from .population import (
    LOG_2PI,
    GaussianMixture,
    as_points,
    log_density,
    noised_mixture,
    sample,
)
from .rng import make_rng
from .sampler import TimeGrid, make_grid


class TailMode(str, enum.Enum):
    ANALYTIC = "analytic"
    TRUNCATE = "truncate"


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature nodes and Monte Carlo budget.

    Attributes:
        grid: Nodes, from ``grid.T`` down to ``grid.t0``.
        mc_samples: Draws of ``z(t)`` per node (and for the boundary term).
        tail_mode: How to account for ``t > grid.T``.
        common_random_numbers: Reuse one set of ``delta`` draws at every node
            instead of fresh draws per node. Pathwise estimates are then
            positively correlated across nodes, which helps when comparing
            two configurations but inflates the variance of a single integral.
    """

    grid: TimeGrid
    mc_samples: int = 10_000
    tail_mode: TailMode = TailMode.ANALYTIC
    common_random_numbers: bool = False

    def __post_init__(self):
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        object.__setattr__(self, "tail_mode", TailMode(self.tail_mode))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "mc_samples": self.mc_samples,
            "tail_mode": self.tail_mode.value,
            "common_random_numbers": self.common_random_numbers,
        }


@dataclass(frozen=True)
class LikelihoodReport:
    """Terms of the negative log-likelihood estimate, in nats."""

    integral_term: float
    boundary_term: float
    tail_term: float
    total_nll: float
    standard_error: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class InformationReport:
    """Mutual information ``I(y; z(t0))`` estimate, in nats."""

    t0: float
    integral_term: float
    tail_term: float
    total: float
    standard_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def trapezoid_log_weights(times: np.ndarray) -> np.ndarray:
    """Weights ``w`` with ``sum_i w_i f(t_i) ~ int f(t) dt`` via trapezoid in ``ln t``.

    The Jacobian ``t`` is folded in, so callers pass raw integrand values.
    """
    u = np.log(times)
    h = np.abs(np.diff(u))
    w = np.zeros(len(times))
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w * times


def _check_finite(a, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteState(f"non-finite {what}")


def _log_p_t0(m: GaussianMixture, t0: float, z) -> np.ndarray:
    return log_density(noised_mixture(m, t0), z)


def _boundary_constant(m: GaussianMixture, y: np.ndarray, t0: float) -> np.ndarray:
    # -ln pop(y) plus the exact expectation of -ln N(z; y, t0 I) over z | y.
    return -np.atleast_1d(log_density(m, y)) + 0.5 * m.dim * (LOG_2PI + np.log(t0) + 1.0)


def _boundary_samples(m, y, t0, delta) -> np.ndarray:
    """Per-draw boundary values; ``y`` is ``(B, d)``, ``delta`` ``(B, n, d)``."""
    z = y[:, None, :] + np.sqrt(t0) * delta
    return _boundary_constant(m, y, t0)[:, None] + _log_p_t0(m, t0, z)


def boundary_term(m: GaussianMixture, y, t0: float, n: int, rng: np.random.Generator) -> float:
    """``E_{z(t0)|y}[-ln p(y | z(t0))]`` by Monte Carlo over ``n`` draws.

    Bayes gives ``p(y|z) = pop(y) N(z; y, t0 I) / p_t0(z)``; only the
    ``ln p_t0(z)`` factor is averaged by Monte Carlo, the Gaussian factor's
    expectation is exact.
    """
    return _boundary_estimate(m, y, t0, n, rng)[0]


def _boundary_estimate(m, y, t0, n, rng) -> tuple[float, float]:
    check_positive_time(t0)
    y = as_points(m, y).reshape(1, m.dim)
    vals = _boundary_samples(m, y, t0, rng.standard_normal((1, n, m.dim)))[0]
    _check_finite(vals, "boundary term")
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def _sq_err(d: Denoiser, y: np.ndarray, t: float, delta: np.ndarray) -> np.ndarray:
    z = y[:, None, :] + np.sqrt(t) * delta
    return np.sum((y[:, None, :] - d.posterior_mean(t, z)) ** 2, axis=-1)


def _nll_batch(m, d, ys, spec: QuadratureSpec, rng, n=None):
    """Per-y (integral, integral variance, boundary, boundary variance, tail).

    ``n`` overrides ``spec.mc_samples`` as the draw count per ``y`` and node.

    With common random numbers the two variances are returned jointly as the
    pathwise variance of ``integral + boundary`` in the first slot.
    """
    times = spec.grid.times
    t0 = spec.grid.t0
    w = trapezoid_log_weights(times)
    n = spec.mc_samples if n is None else n
    shape = (len(ys), n, m.dim)
    ddof = 1 if n > 1 else 0

    if spec.common_random_numbers:
        delta = make_rng(rng, "crn").standard_normal(shape)
        path = np.zeros(shape[:2])
        for i, t in enumerate(times):
            path += w[i] * _sq_err(d, ys, float(t), delta) / (2 * t * t)
        _check_finite(path, "integrand")
        bvals = _boundary_samples(m, ys, t0, delta)
        total = path + bvals
        integral = path.mean(axis=1)
        boundary = bvals.mean(axis=1)
        joint_var = total.var(axis=1, ddof=ddof) / n
        int_var, b_var = joint_var, np.zeros(len(ys))
    else:
        integral = np.zeros(len(ys))
        int_var = np.zeros(len(ys))
        for i, t in enumerate(times):
            vals = _sq_err(d, ys, float(t), make_rng(rng, "node", i).standard_normal(shape))
            vals /= 2 * t * t
            integral += w[i] * vals.mean(axis=1)
            int_var += w[i] ** 2 * vals.var(axis=1, ddof=ddof) / n
        _check_finite(integral, "integrand")
        bvals = _boundary_samples(m, ys, t0, make_rng(rng, "boundary").standard_normal(shape))
        boundary = bvals.mean(axis=1)
        b_var = bvals.var(axis=1, ddof=ddof) / n
    _check_finite(boundary, "boundary term")

    if spec.tail_mode is TailMode.ANALYTIC:
        tail = np.sum((ys - m.mean) ** 2, axis=-1) / (2 * spec.grid.T)
    else:
        tail = np.zeros(len(ys))
    return integral, int_var, boundary, b_var, tail


def nll(
    m: GaussianMixture, d: Denoiser, y, spec: QuadratureSpec, rng: np.random.Generator
) -> LikelihoodReport:
    """Estimate ``-ln pop(y)`` from the denoiser alone plus the ``t0`` boundary.

    The boundary needs the population in closed form, hence ``m``; the
    integral only touches ``m`` through ``d`` and the tail's population mean.
    """
    y = as_points(m, y).reshape(1, m.dim)
    integral, int_var, boundary, b_var, tail = _nll_batch(m, d, y, spec, rng)
    total = integral[0] + boundary[0] + tail[0]
    return LikelihoodReport(
        integral_term=float(integral[0]),
        boundary_term=float(boundary[0]),
        tail_term=float(tail[0]),
        total_nll=float(total),
        standard_error=float(np.sqrt(int_var[0] + b_var[0])),
    )


def entropy_report(
    m: GaussianMixture,
    d: Denoiser,
    spec: QuadratureSpec,
    n_y: int,
    rng: np.random.Generator,
    draws_per_y: int = 1,
) -> LikelihoodReport:
    """Average of :func:`nll` terms over ``n_y`` draws ``y ~ pop``.

    Each per-``y`` estimate is unbiased, so a single inner draw per node
    (``draws_per_y``) suffices; ``spec.mc_samples`` is not used here.
    The standard error is the spread of per-``y`` totals over ``sqrt(n_y)``,
    which already contains the inner Monte Carlo noise.
    """
    if draws_per_y < 1:
        raise ValueError(f"draws_per_y must be >= 1, got {draws_per_y}")
    ys = sample(m, n_y, make_rng(rng, "population"))
    integral, _, boundary, _, tail = _nll_batch(m, d, ys, spec, make_rng(rng, "nll"), n=draws_per_y)
    totals = integral + boundary + tail
    se = float(totals.std(ddof=1) / np.sqrt(n_y)) if n_y > 1 else float("nan")
    return LikelihoodReport(
        integral_term=float(integral.mean()),
        boundary_term=float(boundary.mean()),
        tail_term=float(tail.mean()),
        total_nll=float(totals.mean()),
        standard_error=se,
    )


def entropy_estimate(
    m: GaussianMixture,
    d: Denoiser,
    spec: QuadratureSpec,
    n_y: int,
    rng: np.random.Generator,
    draws_per_y: int = 1,
) -> float:
    """Differential entropy of ``pop`` in nats, as the mean NLL over its own draws."""
    return entropy_report(m, d, spec, n_y, rng, draws_per_y).total_nll


def information_grid(t0: float, spec: QuadratureSpec) -> TimeGrid:
    """Nodes for an integral starting at ``t0``.

    Uses ``[t0, spec.grid.T]`` with the spec's step count; if ``t0`` is not
    below ``T`` the upper end moves to ``t0 * T / spec.grid.t0`` so the grid
    spans the same number of decades.
    """
    T = spec.grid.T
    if t0 >= T:
        T = t0 * spec.grid.T / spec.grid.t0
    return make_grid(t0, T, spec.grid.n_steps)


def mutual_information_report(
    m: GaussianMixture, d: Denoiser, t0: float, spec: QuadratureSpec, rng: np.random.Generator
) -> InformationReport:
    check_positive_time(t0)
    grid = information_grid(t0, spec)
    w = trapezoid_log_weights(grid.times)
    n = spec.mc_samples
    ddof = 1 if n > 1 else 0
    if spec.common_random_numbers:
        base = make_rng(rng, "crn")
        y = sample(m, n, base)
        delta = base.standard_normal(y.shape)
    integral, var, path = 0.0, 0.0, np.zeros(n)
    for i, t in enumerate(grid.times):
        t = float(t)
        if not spec.common_random_numbers:
            r = make_rng(rng, "node", i)
            y = sample(m, n, r)
            delta = r.standard_normal(y.shape)
        z = y + np.sqrt(t) * delta
        vals = np.sum((y - d.posterior_mean(t, z)) ** 2, axis=-1) / (2 * t * t)
        integral += w[i] * vals.mean()
        var += w[i] ** 2 * vals.var(ddof=ddof) / n
        path += w[i] * vals
    if spec.common_random_numbers:
        var = path.var(ddof=ddof) / n
    _check_finite(integral, "integrand")
    if spec.tail_mode is TailMode.ANALYTIC:
        tail = float(np.sum(m.coordinate_variances)) / (2 * grid.T)
    else:
        tail = 0.0
    return InformationReport(
        t0=float(t0),
        integral_term=float(integral),
        tail_term=tail,
        total=float(integral + tail),
        standard_error=float(np.sqrt(var)),
    )


def mutual_information(
    m: GaussianMixture, d: Denoiser, t0: float, spec: QuadratureSpec, rng: np.random.Generator
) -> float:
    """``I(y; z(t0))`` in nats: the time integral of ``mmse(t) / (2 t^2)``."""
    return mutual_information_report(m, d, t0, spec, rng).total
