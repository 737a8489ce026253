"""Numerical checks of the differential identities behind the samplers.

* the heat equation ``dp_t/dt = 1/2 d^2 p_t / dz^2`` for the noised marginals,
* the score identity ``grad ln p_t = (E[y|t,z] - z) / t``,
* transport of ``p_t1`` into ``p_t2`` by the flow ``dz/dt = -1/2 grad ln p_t``,
* time reversal by the lambda = 0 and lambda = 1 reverse processes.

Everything here is deterministic given its seed and leaves its inputs untouched.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .denoiser import Denoiser, OracleDenoiser, check_positive_time, score
from .errors import DimensionUnsupported, InvalidGrid, InvalidInterval
from .forward import conditional_reversal_moments
from .population import GaussianMixture, as_points, log_density, noised_mixture, sample
from .rng import make_rng
from .sampler import (
    SamplerConfig,
    make_grid,
    sample_population,
    sample_summary,
    target_summary,
)


@dataclass(frozen=True)
class ResidualReport:
    max_abs_residual: float
    rms_residual: float
    grid_spec: dict
    tolerance_used: float

    @property
    def passed(self) -> bool:
        return self.max_abs_residual <= self.tolerance_used

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def fokker_planck_residual(
    m: GaussianMixture,
    t: float,
    z_range: tuple[float, float] = (-6.0, 6.0),
    dz: float = 1e-3,
    dtime: float = 1e-4,
    tolerance: float = 1e-5,
) -> ResidualReport:
    """Residual of ``dp/dt - 1/2 d^2p/dz^2`` on a uniform grid, 1-D only.

    Both derivatives are second-order central differences of the closed-form
    noised density, so the residual is pure discretization error,
    ``O(dz^2 + dtime^2)``.
    """
    if m.dim != 1:
        raise DimensionUnsupported("the heat-equation residual is checked in 1-D only")
    lo, hi = z_range
    if not (dz > 0 and dtime > 0 and hi > lo):
        raise InvalidGrid(f"bad grid: z_range={z_range}, dz={dz}, dtime={dtime}")
    if not t > dtime:
        raise InvalidGrid(f"need t > dtime, got t={t}, dtime={dtime}")
    n = int(round((hi - lo) / dz))
    z = (lo + dz * np.arange(n + 1))[:, None]

    def p(s: float, pts) -> np.ndarray:
        return np.exp(log_density(noised_mixture(m, s), pts))

    dp_dt = (p(t + dtime, z) - p(t - dtime, z)) / (2 * dtime)
    p_mid = p(t, z)
    p_lo, p_hi = p(t, z - dz), p(t, z + dz)
    half_laplacian = 0.5 * (p_hi - 2 * p_mid + p_lo) / dz**2
    r = dp_dt - half_laplacian
    return ResidualReport(
        max_abs_residual=float(np.max(np.abs(r))),
        rms_residual=float(np.sqrt(np.mean(r**2))),
        grid_spec={"z_range": [lo, hi], "dz": dz, "t": t, "dtime": dtime},
        tolerance_used=tolerance,
    )


@dataclass(frozen=True)
class ScoreCheck:
    analytic: np.ndarray
    numeric: np.ndarray
    max_abs_err: float


def score_fd_check(m: GaussianMixture, t: float, z, h: float = 1e-4) -> ScoreCheck:
    """Oracle score against central differences of ``ln p_t``, coordinate by coordinate.

    ``z`` may be one point or a batch ``(n, dim)``.
    """
    check_positive_time(t)
    if not h > 0:
        raise InvalidGrid(f"h must be > 0, got {h!r}")
    z = as_points(m, z)
    oracle = OracleDenoiser(m)
    analytic = score(oracle, t, z)
    numeric = np.empty_like(analytic)
    for k in range(m.dim):
        e = np.zeros(m.dim)
        e[k] = h
        numeric[..., k] = (oracle.log_marginal(t, z + e) - oracle.log_marginal(t, z - e)) / (2 * h)
    return ScoreCheck(analytic, numeric, float(np.max(np.abs(analytic - numeric))))


@dataclass
class MomentDeltas:
    """Empirical moments next to closed-form targets."""

    n: int
    mean: np.ndarray
    mean_target: np.ndarray
    mean_se: np.ndarray
    variance: np.ndarray
    variance_target: np.ndarray
    variance_se: np.ndarray
    mode_masses: np.ndarray
    mode_masses_target: np.ndarray
    mode_masses_se: np.ndarray

    @classmethod
    def compare(cls, z, m: GaussianMixture, t: float) -> "MomentDeltas":
        got = sample_summary(z, m, t)
        want = target_summary(m, t)
        return cls(
            n=got["n"],
            mean=got["mean"],
            mean_target=want["mean"],
            mean_se=got["mean_se"],
            variance=got["variance"],
            variance_target=want["variance"],
            variance_se=got["variance_se"],
            mode_masses=got["mode_masses"],
            mode_masses_target=want["mode_masses"],
            mode_masses_se=got["mode_masses_se"],
        )

    @property
    def mean_delta(self) -> np.ndarray:
        return self.mean - self.mean_target

    @property
    def variance_rel_delta(self) -> np.ndarray:
        return self.variance / self.variance_target - 1.0

    @property
    def mode_mass_rel_delta(self) -> np.ndarray:
        return self.mode_masses / self.mode_masses_target - 1.0

    def within(self, mean_abs: float, variance_rel: float, mass_rel: float) -> bool:
        return bool(
            np.all(np.abs(self.mean_delta) <= mean_abs)
            and np.all(np.abs(self.variance_rel_delta) <= variance_rel)
            and np.all(np.abs(self.mode_mass_rel_delta) <= mass_rel)
        )

    def to_dict(self) -> dict:
        out = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}
        out["mean_delta"] = self.mean_delta.tolist()
        out["variance_rel_delta"] = self.variance_rel_delta.tolist()
        out["mode_mass_rel_delta"] = self.mode_mass_rel_delta.tolist()
        return out


def flow_equivalence_check(
    m: GaussianMixture,
    t1: float,
    t2: float,
    n_particles: int,
    n_steps: int,
    rng: np.random.Generator,
) -> MomentDeltas:
    """Push ``p_t1`` forward with the deterministic flow and compare to ``p_t2``.

    Integrates ``dz/dt = -1/2 score(t, z)`` (oracle score) with explicit
    Euler steps on a log-uniform grid from ``t1`` up to ``t2``. ``t2 == t1``
    takes no steps.
    """
    if not (0 < t1 <= t2):
        raise InvalidInterval(f"need 0 < t1 <= t2, got t1={t1!r}, t2={t2!r}")
    oracle = OracleDenoiser(m)
    z = sample(noised_mixture(m, t1), n_particles, rng)
    if t2 > t1:
        times = make_grid(t1, t2, n_steps).times[::-1]  # increasing
        for i in range(n_steps):
            t, dt = float(times[i]), float(times[i + 1] - times[i])
            z = z - 0.5 * dt * score(oracle, t, z)
    return MomentDeltas.compare(z, m, t2)


def reverse_consistency_check(
    m: GaussianMixture, d: Denoiser, cfg: SamplerConfig, threads: int = 1
) -> dict[str, MomentDeltas]:
    """Run the sampler at lambda = 1 and lambda = 0 and compare both to ``p_t0``."""
    out = {}
    for lam in (1.0, 0.0):
        run = SamplerConfig(cfg.grid, lam, cfg.n_chains, cfg.seed, cfg.init)
        z = sample_population(d, m, run, threads=threads)
        out[f"lambda={lam:g}"] = MomentDeltas.compare(z, m, cfg.grid.t0)
    return out


# Suite driven by the ``check`` subcommand.

DEFAULT_TOLERANCES = {
    "score": 1e-6,  # max abs error
    "fokker_planck": 1e-5,  # max abs residual
    "flow": 0.02,  # relative moment error
    "reversal": 0.01,  # relative error of the conditional variance
    "reverse_mean": 0.02,  # abs
    "reverse_variance": 0.02,  # relative
    "reverse_mass": 0.01,  # relative
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)


def _check_score(m, tols, seed) -> CheckResult:
    tol = tols["score"]
    z = np.zeros((121, m.dim))
    z[:, 0] = np.round(np.linspace(-6.0, 6.0, 121), 12)
    errs = {}
    for t in (0.01, 0.1, 1.0, 10.0):
        errs[str(t)] = score_fd_check(m, t, z, 1e-4).max_abs_err
    failures = [f"score t={t}: err {e:.3g} > {tol:g}" for t, e in errs.items() if e > tol]
    return CheckResult("score", not failures, {"max_abs_err": errs, "tolerance": tol}, failures)


def _check_fokker_planck(m, tols, seed) -> CheckResult:
    tol = tols["fokker_planck"]
    if m.dim != 1:
        return CheckResult("fokker_planck", True, {"skipped": "dim > 1"})
    details, failures = {}, []
    for t in (0.5, 1.0):
        coarse = fokker_planck_residual(m, t, tolerance=tol)
        fine = fokker_planck_residual(m, t, dz=5e-4, dtime=5e-5, tolerance=tol)
        ratio = coarse.rms_residual / fine.rms_residual
        details[str(t)] = {**coarse.to_dict(), "refinement_ratio": ratio}
        if not coarse.passed:
            failures.append(
                f"fokker_planck t={t}: residual {coarse.max_abs_residual:.3g} > {tol:g}"
            )
        if not 3.0 <= ratio <= 5.0:
            failures.append(f"fokker_planck t={t}: refinement ratio {ratio:.2f} not ~4")
    return CheckResult("fokker_planck", not failures, details, failures)


def _check_flow(m, tols, seed) -> CheckResult:
    tol = tols["flow"]
    deltas = flow_equivalence_check(m, 0.01, 1.0, 100_000, 512, make_rng(seed, "check", "flow"))
    mean_ok = np.all(np.abs(deltas.mean_delta) <= 3 * deltas.mean_se)
    var_ok = np.all(np.abs(deltas.variance_rel_delta) <= tol)
    mass_ok = np.all(np.abs(deltas.mode_mass_rel_delta) <= tol)
    failures = []
    if not mean_ok:
        failures.append(f"flow: mean delta {deltas.mean_delta.tolist()} beyond 3 SE")
    if not var_ok:
        failures.append(f"flow: variance rel delta {deltas.variance_rel_delta.tolist()} > {tol:g}")
    if not mass_ok:
        failures.append(
            f"flow: mode-mass rel delta {deltas.mode_mass_rel_delta.tolist()} > {tol:g}"
        )
    return CheckResult("flow", not failures, deltas.to_dict(), failures)


def _check_reversal(m, tols, seed) -> CheckResult:
    tol = tols["reversal"]
    res = conditional_reversal_moments(
        np.zeros(m.dim), 1.0, 1e-3, 1_000_000, make_rng(seed, "check", "reversal")
    )
    var_rel = res.empirical_cov_diag / res.predicted_variance - 1.0
    failures = []
    if np.any(np.abs(res.empirical_mean) > 3 * res.mean_standard_error):
        failures.append(f"reversal: mean residual {res.empirical_mean.tolist()} beyond 3 SE")
    if np.any(np.abs(var_rel) > tol):
        failures.append(f"reversal: variance rel error {var_rel.tolist()} > {tol:g}")
    details = {
        "mean_residual": res.empirical_mean.tolist(),
        "mean_se": res.mean_standard_error.tolist(),
        "variance_rel_error": var_rel.tolist(),
    }
    return CheckResult("reversal", not failures, details, failures)


def _reverse_checker(d: Denoiser | None, cfg: SamplerConfig | None, threads: int):
    def check(m, tols, seed) -> CheckResult:
        run = cfg or SamplerConfig(make_grid(1e-3, 400.0, 256), 1.0, 100_000, seed)
        results = reverse_consistency_check(m, d or OracleDenoiser(m), run, threads)
        failures = []
        for name, deltas in results.items():
            if not deltas.within(
                tols["reverse_mean"], tols["reverse_variance"], tols["reverse_mass"]
            ):
                failures.append(
                    f"reverse {name}: mean delta {deltas.mean_delta.tolist()}, "
                    f"variance rel {deltas.variance_rel_delta.tolist()}, "
                    f"mass rel {deltas.mode_mass_rel_delta.tolist()}"
                )
        details = {k: v.to_dict() for k, v in results.items()}
        return CheckResult("reverse", not failures, details, failures)

    return check


CHECK_NAMES = ("score", "fokker_planck", "flow", "reversal", "reverse")


def run_checks(
    m: GaussianMixture,
    seed: int = 0,
    only: Iterable[str] | None = None,
    tolerances: dict[str, float] | None = None,
    denoiser: Denoiser | None = None,
    sampler_cfg: SamplerConfig | None = None,
    threads: int = 1,
) -> list[CheckResult]:
    """Run the named checks (all by default) and collect pass/fail results.

    ``tolerances`` overrides entries of :data:`DEFAULT_TOLERANCES`.
    """
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    registry: dict[str, Callable[..., CheckResult]] = {
        "score": _check_score,
        "fokker_planck": _check_fokker_planck,
        "flow": _check_flow,
        "reversal": _check_reversal,
        "reverse": _reverse_checker(denoiser, sampler_cfg, threads),
    }
    names = list(only) if only else list(CHECK_NAMES)
    unknown = [n for n in names if n not in registry]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; choose from {list(CHECK_NAMES)}")
    return [registry[n](m, tol, seed) for n in names]
