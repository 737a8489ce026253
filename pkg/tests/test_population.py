import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difflab.errors import (
    DimensionMismatch,
    NegativeTime,
    NonPositiveVariance,
    NonPositiveWeight,
    WeightSumMismatch,
)
from difflab.population import (
    bimodal,
    log_density,
    mixture_new,
    mode_masses,
    noised_mixture,
    responsibilities,
    sample,
    standard_normal,
)
from difflab.rng import make_rng

# ln pop(y) references computed with mpmath at 40 digits
BIMODAL_LOGPDF = {2.0: -0.91893853320466008, 0.0: -8.2257913526447274, 1.3: -1.8989385322785367}
BIMODAL_LOGPDF_FAR = -19208.918938533205  # y = 100
BIMODAL_2D_LOGPDF = -3.6447297733142318  # y = (1, 0.5)


def test_single_component_is_standard_normal():
    m = mixture_new(1, [1], [[0]], [1])
    assert m.dim == 1 and m.n_components == 1
    assert m == standard_normal()


def test_weight_sum_mismatch():
    with pytest.raises(WeightSumMismatch):
        mixture_new(1, [0.4, 0.7], [[0], [1]], [1, 1])


def test_weights_within_tolerance_are_renormalized():
    m = mixture_new(1, [0.5, 0.5 + 5e-10], [[0], [1]], [1, 1])
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_two_dim_benchmark():
    m = mixture_new(2, [0.5, 0.5], [[-2, 0], [2, 0]], [0.25, 0.25])
    assert m == bimodal(2)
    assert m.means.shape == (2, 2)


@pytest.mark.parametrize(
    "kwargs, exc",
    [
        (dict(weights=[0.0, 1.0]), NonPositiveWeight),
        (dict(weights=[-0.5, 1.5]), NonPositiveWeight),
        (dict(variances=[0.0, 1.0]), NonPositiveVariance),
        (dict(means=[[0, 0], [1, 1]]), DimensionMismatch),
        (dict(means=[[0]]), DimensionMismatch),
    ],
)
def test_constructor_rejects(kwargs, exc):
    args = dict(weights=[0.5, 0.5], means=[[0], [1]], variances=[1, 1])
    args.update(kwargs)
    with pytest.raises(exc):
        mixture_new(1, **args)


def test_arrays_are_read_only(bimix):
    with pytest.raises(ValueError):
        bimix.weights[0] = 0.9


def test_moments(bimix):
    assert bimix.mean.tolist() == [0.0]
    assert bimix.coordinate_variances.tolist() == [4.25]
    assert bimix.second_moment == pytest.approx(4.25)


def test_log_density_standard_normal_origin(gauss):
    assert log_density(gauss, 0.0) == pytest.approx(-0.9189385, abs=1e-7)


@pytest.mark.parametrize("y, expected", sorted(BIMODAL_LOGPDF.items()))
def test_log_density_bimodal_reference(bimix, y, expected):
    assert log_density(bimix, y) == pytest.approx(expected, rel=1e-13)


def test_log_density_symmetric(bimix):
    assert log_density(bimix, 2.0) == log_density(bimix, -2.0)


def test_log_density_far_tail_is_finite(bimix):
    val = log_density(bimix, 100.0)
    assert np.isfinite(val)
    assert val == pytest.approx(BIMODAL_LOGPDF_FAR, rel=1e-13)


def test_log_density_two_dim_reference():
    assert log_density(bimodal(2), [1.0, 0.5]) == pytest.approx(BIMODAL_2D_LOGPDF, rel=1e-13)


def test_log_density_batch_shape(bimix):
    out = log_density(bimix, np.zeros((4, 3, 1)))
    assert out.shape == (4, 3)


def test_log_density_wrong_dim(bimix):
    with pytest.raises(DimensionMismatch):
        log_density(bimix, [[0.0, 1.0]])


@pytest.mark.parametrize("m", [standard_normal(), bimodal()], ids=["gauss", "bimodal"])
def test_density_integrates_to_one(m):
    y = np.arange(-40.0, 40.0 + 5e-4, 1e-3)[:, None]
    total = np.trapezoid(np.exp(log_density(m, y)), dx=1e-3)
    assert abs(total - 1.0) <= 1e-6


def test_noised_mixture_identity_at_zero(bimix):
    assert noised_mixture(bimix, 0.0) == bimix


def test_noised_standard_normal():
    p = noised_mixture(standard_normal(), 3.0)
    assert p.variances.tolist() == [4.0]


def test_noised_negative_time(bimix):
    with pytest.raises(NegativeTime):
        noised_mixture(bimix, -1e-3)


@settings(max_examples=200, deadline=None)
@given(
    s=st.floats(0.0, 1e3, allow_nan=False),
    t=st.floats(0.0, 1e3, allow_nan=False),
    v=st.floats(1e-3, 10.0),
)
def test_noised_mixture_composes(s, t, v):
    m = mixture_new(1, [0.3, 0.7], [[-1.0], [2.0]], [v, 2 * v])
    a = noised_mixture(noised_mixture(m, s), t)
    b = noised_mixture(m, s + t)
    # weights and means are carried through untouched; variances are
    # (v + s) + t against v + (s + t), equal up to float rounding
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.means, b.means)
    np.testing.assert_allclose(a.variances, b.variances, rtol=4 * np.finfo(float).eps)


@settings(max_examples=100, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.floats(0.05, 1.0), st.floats(-5, 5), st.floats(0.1, 3.0)),
        min_size=2,
        max_size=5,
    ),
    perm_seed=st.integers(0, 2**32 - 1),
    y=st.floats(-10, 10),
)
def test_log_density_permutation_invariant(data, perm_seed, y):
    w = np.array([d[0] for d in data])
    w = w / w.sum()
    mu = [[d[1]] for d in data]
    v = [d[2] for d in data]
    perm = np.random.default_rng(perm_seed).permutation(len(data))
    m1 = mixture_new(1, w, mu, v)
    m2 = mixture_new(1, w[perm], [mu[i] for i in perm], [v[i] for i in perm])
    assert log_density(m1, y) == pytest.approx(log_density(m2, y), rel=1e-12, abs=1e-12)


def test_responsibilities_sum_to_one(bimix):
    r = responsibilities(bimix, np.linspace(-5, 5, 11)[:, None])
    np.testing.assert_allclose(r.sum(axis=-1), 1.0, rtol=1e-14)


def test_sample_standard_normal_moments(gauss):
    y = sample(gauss, 1_000_000, make_rng(1, "t"))
    assert y.shape == (1_000_000, 1)
    assert abs(y.mean()) <= 0.004
    assert abs(y.var() - 1.0) <= 0.01


def test_sample_bimodal_half_negative(bimix):
    y = sample(bimix, 1_000_000, make_rng(2, "t"))
    assert abs(np.mean(y < 0) - 0.5) <= 0.002


def test_sample_reproducible(bimix):
    a = sample(bimix, 1000, make_rng(5))
    b = sample(bimix, 1000, make_rng(5))
    assert np.array_equal(a, b)


def test_mode_masses_of_own_samples(bimix):
    z = sample(noised_mixture(bimix, 0.5), 200_000, make_rng(3))
    np.testing.assert_allclose(mode_masses(bimix, z, 0.5), [0.5, 0.5], atol=0.005)
