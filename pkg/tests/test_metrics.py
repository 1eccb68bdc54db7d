import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalaug.augment import AugmentedSet
from causalaug.data import Dataset
from causalaug.errors import DegenerateError, EmptyError, LengthError
from causalaug.metrics import (compare_weighted_tables, kl_divergence_1d_weighted,
                               mape, r2, variance_rel_diff,
                               variance_rel_diff_columns, wasserstein_1d_weighted,
                               weighted_variance)


def weighted_sets(draw):
    pass


small_floats = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@st.composite
def weighted_sample(draw):
    n = draw(st.integers(1, 12))
    values = draw(st.lists(small_floats, min_size=n, max_size=n))
    weights = draw(st.lists(st.floats(0.01, 5.0), min_size=n, max_size=n))
    return np.array(values), np.array(weights)


class TestWasserstein:
    def test_identical_sets_zero(self):
        x = np.array([0.3, 1.2, -0.7])
        w = np.array([0.2, 0.5, 0.3])
        assert wasserstein_1d_weighted(x, x, w, w) == 0.0

    def test_point_masses(self):
        assert wasserstein_1d_weighted([0.0], [2.5]) == pytest.approx(2.5)
        assert wasserstein_1d_weighted([0.0], [-4.0]) == pytest.approx(4.0)

    def test_reweighted_binary(self):
        # integrate |CDF difference|: mass 0.25 moved by distance 1
        got = wasserstein_1d_weighted([0.0, 1.0], [0.0, 1.0],
                                      None, [0.75, 0.25])
        assert got == pytest.approx(0.25)

    def test_empty_raises(self):
        with pytest.raises(EmptyError):
            wasserstein_1d_weighted([], [1.0])

    @settings(max_examples=50, deadline=None)
    @given(a=weighted_sample(), b=weighted_sample(), c=weighted_sample())
    def test_triangle_inequality(self, a, b, c):
        dab = wasserstein_1d_weighted(a[0], b[0], a[1], b[1])
        dbc = wasserstein_1d_weighted(b[0], c[0], b[1], c[1])
        dac = wasserstein_1d_weighted(a[0], c[0], a[1], c[1])
        assert dac <= dab + dbc + 1e-9

    @settings(max_examples=30, deadline=None)
    @given(a=weighted_sample(), shift=st.floats(-10, 10, allow_nan=False))
    def test_translation(self, a, shift):
        x, w = a
        assert wasserstein_1d_weighted(x, x + shift, w, w) == pytest.approx(
            abs(shift), abs=1e-9)


class TestKl:
    def test_self_divergence_small(self):
        x = np.random.default_rng(0).normal(size=400)
        assert kl_divergence_1d_weighted(x, x) <= 1e-3

    def test_gaussian_shift_half(self):
        rng = np.random.default_rng(1)
        p = rng.normal(0.0, 1.0, 5000)
        q = rng.normal(1.0, 1.0, 5000)
        assert kl_divergence_1d_weighted(p, q) == pytest.approx(0.5, abs=0.1)

    def test_disjoint_supports_finite(self):
        p = np.random.default_rng(2).normal(0.0, 0.5, 200)
        q = np.random.default_rng(3).normal(20.0, 0.5, 200)
        v = kl_divergence_1d_weighted(p, q)
        assert np.isfinite(v)
        # floored q density bounds the value by the log(1/floor) scale
        assert 1.0 < v <= np.log(1e12) + 1.0

    def test_never_negative(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            p = rng.normal(size=50)
            q = rng.normal(size=50)
            assert kl_divergence_1d_weighted(p, q) >= 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptyError):
            kl_divergence_1d_weighted([], [1.0])


class TestVariance:
    def test_uniform_weights_match_population_variance(self):
        x = np.random.default_rng(5).normal(size=200)
        assert weighted_variance(x) == pytest.approx(np.var(x), rel=1e-12)

    def test_self_comparison_is_exact_zero(self):
        vals = np.random.default_rng(6).normal(size=(40, 3))
        orig = Dataset(values=vals)
        aug = AugmentedSet(points=vals, weights=np.full(40, 1.0 / 40),
                           provenance=np.tile(np.arange(40)[:, None], (1, 3)),
                           theta=0.0, n_source=40)
        assert variance_rel_diff(orig, aug) == 0.0

    def test_all_mass_on_one_point(self):
        vals = np.random.default_rng(7).normal(size=(10, 2))
        orig = Dataset(values=vals)
        aug = AugmentedSet(points=vals[:1], weights=np.array([0.05]),
                           provenance=np.zeros((1, 2), dtype=int),
                           theta=0.0, n_source=10)
        assert variance_rel_diff(orig, aug) == pytest.approx(-1.0)

    def test_hand_computed_three_points(self):
        a = np.array([[0.0], [1.0], [2.0]])           # variance 2/3
        b = np.array([[0.0], [2.0], [4.0]])
        wb = np.array([0.25, 0.5, 0.25])              # weighted variance 2
        got = variance_rel_diff_columns(a, b, b_weights=wb)
        assert got[0] == pytest.approx((2.0 - 2.0 / 3.0) / (2.0 / 3.0))

    def test_zero_variance_reference_degenerate(self):
        with pytest.raises(DegenerateError):
            variance_rel_diff_columns(np.ones((5, 1)), np.zeros((5, 1)))


class TestPredictionMetrics:
    def test_mape_perfect(self):
        assert mape([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_mape_arithmetic(self):
        assert mape([1.0, 2.0], [1.1, 1.8]) == pytest.approx(0.1)

    def test_mape_zero_target_guarded(self):
        assert np.isfinite(mape([0.0, 1.0], [0.5, 1.0]))

    def test_mape_length_mismatch(self):
        with pytest.raises(LengthError):
            mape([1.0], [1.0, 2.0])

    def test_r2_perfect(self):
        assert r2([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]) == 1.0

    def test_r2_mean_prediction_zero(self):
        y = np.array([0.0, 1.0, 2.0])
        assert r2(y, np.full(3, y.mean())) == pytest.approx(0.0)

    def test_r2_hand_example(self):
        assert r2([0.0, 1.0, 2.0], [0.0, 1.0, 1.0]) == pytest.approx(0.5)

    def test_r2_constant_target_degenerate(self):
        with pytest.raises(DegenerateError):
            r2([1.0, 1.0], [1.0, 2.0])


class TestReport:
    def test_self_report_near_zero(self):
        vals = np.random.default_rng(8).normal(size=(100, 3))
        report = compare_weighted_tables(vals, vals)
        assert report.wasserstein == 0.0
        assert report.variance_rel_diff == 0.0
        assert report.kl_divergence <= 1e-3

    def test_json_payload(self):
        vals = np.random.default_rng(9).normal(size=(30, 2))
        other = vals + 1.0
        report = compare_weighted_tables(vals, other)
        payload = report.to_json()
        assert payload["estimator"] == "per-variable averaged"
        assert len(payload["per_variable"]["wasserstein"]) == 2
        assert payload["wasserstein"] == pytest.approx(1.0, abs=1e-9)
