import numpy as np
import pytest

from difflab.denoiser import OracleDenoiser
from difflab.diagnostics import (
    CHECK_NAMES,
    DEFAULT_TOLERANCES,
    MomentDeltas,
    flow_equivalence_check,
    fokker_planck_residual,
    reverse_consistency_check,
    run_checks,
    score_fd_check,
)
from difflab.errors import DimensionUnsupported, InvalidGrid, InvalidInterval
from difflab.network import train_denoiser
from difflab.population import bimodal, noised_mixture, sample, standard_normal
from difflab.rng import make_rng
from difflab.sampler import SamplerConfig, make_grid


def test_fokker_planck_standard_normal(gauss):
    r = fokker_planck_residual(gauss, 1.0, tolerance=1e-6)
    assert r.passed and r.max_abs_residual <= 1e-6


def test_fokker_planck_bimodal(bimix):
    assert fokker_planck_residual(bimix, 0.5).max_abs_residual <= 1e-5


@pytest.mark.parametrize(
    "m, t", [(standard_normal(), 1.0), (bimodal(), 0.5)], ids=["gauss", "bimodal"]
)
def test_fokker_planck_second_order(m, t):
    coarse = fokker_planck_residual(m, t)
    fine = fokker_planck_residual(m, t, dz=5e-4, dtime=5e-5)
    assert 3.0 <= coarse.max_abs_residual / fine.max_abs_residual <= 5.0


def test_fokker_planck_rejects(bimix):
    with pytest.raises(DimensionUnsupported):
        fokker_planck_residual(bimodal(2), 1.0)
    with pytest.raises(InvalidGrid):
        fokker_planck_residual(bimix, 1e-5)


def test_score_check_standard_normal(gauss):
    assert score_fd_check(gauss, 1.0, [2.0]).max_abs_err <= 1e-8


@pytest.mark.parametrize("t", [0.01, 0.1, 1.0, 10.0])
def test_score_check_bimodal_grid(bimix, t):
    z = np.linspace(-6, 6, 121)[:, None]
    assert score_fd_check(bimix, t, z).max_abs_err <= 1e-6


def test_score_check_symmetric_point(bimix):
    c = score_fd_check(bimix, 0.5, [0.0])
    assert np.all(np.abs(c.analytic) <= 1e-10) and np.all(np.abs(c.numeric) <= 1e-10)


def test_flow_standard_normal(gauss):
    d = flow_equivalence_check(gauss, 0.1, 10.0, 100_000, 512, make_rng(0))
    assert abs(d.variance_rel_delta[0]) <= 0.02
    assert d.variance_target[0] == 11.0


def test_flow_bimodal(bimix):
    d = flow_equivalence_check(bimix, 0.01, 1.0, 100_000, 512, make_rng(1))
    assert abs(d.mean_delta[0]) <= 3 * d.mean_se[0]
    assert abs(d.variance_rel_delta[0]) <= 0.02


def test_flow_zero_interval_is_identity(bimix):
    d = flow_equivalence_check(bimix, 0.3, 0.3, 1000, 16, make_rng(2))
    z0 = sample(noised_mixture(bimix, 0.3), 1000, make_rng(2))
    assert d.mean[0] == z0.mean()


def test_flow_rejects_backwards(bimix):
    with pytest.raises(InvalidInterval):
        flow_equivalence_check(bimix, 1.0, 0.5, 10, 4, make_rng(0))


def test_moment_deltas_on_exact_samples(bimix):
    z = sample(noised_mixture(bimix, 0.2), 200_000, make_rng(3))
    d = MomentDeltas.compare(z, bimix, 0.2)
    assert d.within(0.03, 0.02, 0.01)
    assert set(d.to_dict()) >= {"mean_delta", "variance_rel_delta", "mode_mass_rel_delta"}


def test_reverse_consistency_bimodal(bimix):
    cfg = SamplerConfig(make_grid(1e-3, 400.0, 256), 1.0, 100_000, 0)
    for deltas in reverse_consistency_check(bimix, OracleDenoiser(bimix), cfg).values():
        assert deltas.within(0.02, 0.02, 0.01)


def test_reverse_consistency_single_gaussian(gauss):
    cfg = SamplerConfig(make_grid(1e-3, 400.0, 2048), 1.0, 100_000, 0)
    res = reverse_consistency_check(gauss, OracleDenoiser(gauss), cfg)
    for deltas in res.values():
        assert deltas.variance_target[0] == pytest.approx(1.001)
        assert abs(deltas.variance_rel_delta[0]) <= 0.01


def test_reverse_consistency_trained_denoiser(bimix):
    d = train_denoiser(bimix, [2, 32, 32, 1], (1e-3, 400), 20_000, 128, make_rng(4))
    cfg = SamplerConfig(make_grid(1e-3, 400.0, 256), 1.0, 20_000, 0, "wide_gaussian")
    for deltas in reverse_consistency_check(bimix, d, cfg).values():
        assert np.all(np.abs(deltas.mode_mass_rel_delta) <= 0.05)


def test_run_checks_bimodal_all_pass(bimix):
    results = run_checks(bimix, seed=0)
    assert [r.name for r in results] == list(CHECK_NAMES)
    assert all(r.passed for r in results), [f for r in results for f in r.failures]


def test_run_checks_only_and_forced_failure(bimix):
    results = run_checks(bimix, only=["score"], tolerances={"score": 1e-12})
    assert len(results) == 1 and not results[0].passed
    assert results[0].failures


def test_run_checks_unknown_name(bimix):
    with pytest.raises(KeyError):
        run_checks(bimix, only=["bogus"])


def test_checks_deterministic_and_pure(bimix):
    before = bimix.to_dict()
    a = run_checks(bimix, seed=3, only=["flow", "reversal"])
    b = run_checks(bimix, seed=3, only=["flow", "reversal"])
    assert [r.details for r in a] == [r.details for r in b]
    assert bimix.to_dict() == before


def test_default_tolerances_cover_all_checks():
    assert {"score", "fokker_planck", "flow", "reversal"} <= set(DEFAULT_TOLERANCES)
