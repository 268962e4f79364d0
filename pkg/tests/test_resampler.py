import numpy as np
import pytest

from conftest import unit_rows
from ptta.errors import NumericError
from ptta.resampler import (
    ClassGaussianResampler,
    ClassStats,
    estimate_stats,
    resample,
    resample_epoch,
    resample_raw,
)
from ptta.rng import GaussianStream


class TestEstimateStats:
    def test_hand_computed_two_rows(self):
        stats = estimate_stats(np.array([[0.0, 2.0], [2.0, 0.0]]), class_index=3)
        np.testing.assert_array_equal(stats.mean, [1.0, 1.0])
        np.testing.assert_array_equal(stats.var, [2.0, 2.0])
        assert stats.class_index == 3 and stats.count == 2

    def test_identical_rows_zero_variance(self):
        rows = np.tile(np.array([0.3, -0.1, 0.7]), (5, 1))
        stats = estimate_stats(rows)
        np.testing.assert_array_equal(stats.var, np.zeros(3))

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m, d = rng.integers(2, 12), rng.integers(1, 9)
            rows = rng.standard_normal((m, d)) * rng.uniform(0.1, 5.0)
            stats = estimate_stats(rows)
            # independent two-pass summation
            mean = np.zeros(d)
            for r in range(m):
                mean += rows[r]
            mean /= m
            var = np.zeros(d)
            for r in range(m):
                var += (rows[r] - mean) ** 2
            var /= m - 1
            np.testing.assert_allclose(stats.mean, mean, rtol=0, atol=1e-12)
            np.testing.assert_allclose(stats.var, var, rtol=0, atol=1e-12)

    def test_single_row_rejected(self):
        with pytest.raises(NumericError, match="at least two styles"):
            estimate_stats(np.ones((1, 4)))


class TestResample:
    def test_zero_variance_returns_normalized_mean(self):
        mean = np.array([3.0, 4.0])
        stats = ClassStats(mean=mean, var=np.zeros(2), class_index=0, count=2)
        rows = resample(stats, 5, GaussianStream(0))
        np.testing.assert_allclose(rows, np.tile([0.6, 0.8], (5, 1)), rtol=0, atol=1e-15)

    def test_deterministic_for_fixed_seed(self):
        stats = estimate_stats(np.random.default_rng(1).standard_normal((6, 4)))
        a = resample(stats, 10, GaussianStream(99))
        b = resample(stats, 10, GaussianStream(99))
        np.testing.assert_array_equal(a, b)

    def test_rows_unit_norm(self):
        stats = estimate_stats(unit_rows(np.random.default_rng(2), 8, 5))
        rows = resample(stats, 50, GaussianStream(5))
        np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)

    def test_pre_normalization_mean_matches_clt_bound(self):
        rng = np.random.default_rng(4)
        stats = estimate_stats(rng.standard_normal((10, 16)) * 0.3 + 0.5)
        draws = resample_raw(stats, 10_000, GaussianStream(7))
        sample_mean = draws.mean(axis=0)
        bound = 4.0 * np.sqrt(stats.var) / np.sqrt(10_000)
        within = np.abs(sample_mean - stats.mean) <= bound
        assert within.mean() >= 0.95

    def test_degenerate_zero_mean_zero_var_errors_after_redraw(self):
        stats = ClassStats(mean=np.zeros(3), var=np.zeros(3), class_index=1, count=2)
        with pytest.raises(NumericError, match="class 1"):
            resample(stats, 1, GaussianStream(0))

    def test_count_must_be_positive(self):
        stats = ClassStats(mean=np.ones(2), var=np.ones(2), class_index=0, count=2)
        with pytest.raises(ValueError, match="count"):
            resample(stats, 0, GaussianStream(0))


class TestResampleEpoch:
    def test_shape_and_per_class_counts(self, desk_bank_seed0):
        _, bank = desk_bank_seed0
        drawn, labels = resample_epoch(bank, seed=0, epoch=0)
        assert drawn.shape == bank.features.shape
        np.testing.assert_array_equal(np.bincount(labels), np.bincount(bank.labels))

    def test_epochs_differ_same_seed(self, desk_bank_seed0):
        _, bank = desk_bank_seed0
        a, _ = resample_epoch(bank, seed=0, epoch=0)
        b, _ = resample_epoch(bank, seed=0, epoch=1)
        assert np.any(a != b)

    def test_same_seed_epoch_identical(self, desk_bank_seed0):
        _, bank = desk_bank_seed0
        a, la = resample_epoch(bank, seed=3, epoch=5)
        b, lb = resample_epoch(bank, seed=3, epoch=5)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(la, lb)

    def test_resampled_rows_cluster_with_own_class(self, desk_banks_seeds012):
        # each class's draws sit closest to their own class mean
        for _, bank in desk_banks_seeds012:
            drawn, labels = resample_epoch(bank, seed=0, epoch=0)
            n = bank.n_classes
            centers = np.stack(
                [bank.rows_for_class(j).mean(axis=0) for j in range(n)]
            )
            centers /= np.linalg.norm(centers, axis=1)[:, None]
            for j in range(n):
                mine = drawn[labels == j]
                cos = mine @ centers.T
                own = cos[:, j].mean()
                for k in range(n):
                    if k != j:
                        assert own > cos[:, k].mean()


class TestClassGaussianResampler:
    def test_fit_sample_round_trip(self):
        rng = np.random.default_rng(0)
        X = unit_rows(rng, 12, 6)
        y = np.repeat(np.arange(3), 4)
        r = ClassGaussianResampler(seed=11).fit(X, y)
        drawn, labels = r.sample(epoch=2)
        assert drawn.shape == X.shape
        np.testing.assert_array_equal(np.bincount(labels), np.bincount(y))
        d2, l2 = ClassGaussianResampler(seed=11).fit(X, y).sample(epoch=2)
        np.testing.assert_array_equal(drawn, d2)

    def test_matches_resample_epoch_on_bank_layout(self, desk_bank_seed0):
        _, bank = desk_bank_seed0
        r = ClassGaussianResampler(seed=4).fit(bank.features, bank.labels)
        a, _ = r.sample(epoch=1)
        b, _ = resample_epoch(bank, seed=4, epoch=1)
        np.testing.assert_array_equal(a, b)

    def test_sklearn_params(self):
        r = ClassGaussianResampler(seed=5)
        assert r.get_params() == {"seed": 5}
        r.set_params(seed=9)
        assert r.seed == 9

    def test_sample_before_fit_rejected(self):
        with pytest.raises(NumericError, match="fitted"):
            ClassGaussianResampler().sample()
