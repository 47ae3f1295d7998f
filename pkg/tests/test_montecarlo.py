import numpy as np
import pytest

from covrank import (
    NullSample,
    SimulationConfig,
    ValidationError,
    collect_null_statistics,
    ks_distance,
    ks_pvalue_approx,
    run_rejection_table,
)


def small_table_config(**overrides):
    base = dict(p=5, true_rank=2, n=80, reps=30, seed=4242)
    base.update(overrides)
    return SimulationConfig(**base)


class TestRunRejectionTable:
    def test_empty_run(self):
        table = run_rejection_table(small_table_config(reps=0))
        assert table.reached == (0, 0, 0, 0)
        assert table.rejected == (0, 0, 0, 0)
        assert all(table.rate_percent(k) is None for k in range(1, 5))

    def test_chained_counts(self):
        for cfg in (
            small_table_config(),
            small_table_config(p=4, true_rank=1, n=40, reps=25, seed=7),
            small_table_config(p=4, true_rank=0, n=60, reps=25,
                               local_null_tau=0.5, seed=8),
        ):
            table = run_rejection_table(cfg)
            assert table.reached[0] == cfg.reps
            for i in range(table.n_steps - 1):
                assert table.reached[i + 1] == table.rejected[i]
                assert 0 <= table.rejected[i] <= table.reached[i]

    def test_first_true_null_step_never_rejects_under_exact_low_rank(self):
        cfg = small_table_config()  # tau = 0, true rank 2
        table = run_rejection_table(cfg)
        assert table.reached[2] > 0  # step 3 was reached
        assert table.rejected[2] == 0  # and never rejected: zero-scale rule

    def test_rates(self):
        table = run_rejection_table(small_table_config(reps=20))
        r1 = table.rate_percent(1)
        assert r1 is not None and 0.0 <= r1 <= 100.0
        with pytest.raises(ValidationError):
            table.rate_percent(0)
        with pytest.raises(ValidationError):
            table.rate_percent(5)

    def test_worker_count_does_not_change_results(self):
        cfg = small_table_config(reps=16)
        t1 = run_rejection_table(cfg, workers=1)
        t2 = run_rejection_table(cfg, workers=3)
        assert t1.reached == t2.reached
        assert t1.rejected == t2.rejected

    def test_rank_estimates_concentrate_at_true_rank(self):
        # Three well-separated factors, n = 500: the estimate should be 3 in
        # the overwhelming majority of replications.
        cfg = SimulationConfig(p=10, true_rank=3, n=500, reps=120, seed=1001)
        table = run_rejection_table(cfg)
        exactly_three = table.rejected[2] - table.rejected[3]
        assert exactly_three / cfg.reps >= 0.90


class TestCollectNullStatistics:
    def null_config(self, **overrides):
        base = dict(p=4, true_rank=0, n=200, reps=40,
                    local_null_tau=0.5, seed=99)
        base.update(overrides)
        return SimulationConfig(**base)

    def test_values_in_unit_interval(self):
        sample = collect_null_statistics(self.null_config(), 1)
        assert sample.statistics.shape == (40,)
        assert np.all(sample.statistics >= 0.0)
        assert np.all(sample.statistics <= 1.0)

    def test_rejects_zero_tau_with_degeneracy_message(self):
        cfg = SimulationConfig(p=4, true_rank=0, n=200, reps=10, seed=99)
        with pytest.raises(ValidationError, match="degenerate"):
            collect_null_statistics(cfg, 1)

    def test_rejects_mismatched_rank(self):
        with pytest.raises(ValidationError, match="true_rank"):
            collect_null_statistics(self.null_config(), 2)

    def test_rejects_out_of_range_step(self):
        with pytest.raises(ValidationError):
            collect_null_statistics(self.null_config(), 0)
        with pytest.raises(ValidationError):
            collect_null_statistics(self.null_config(), 4)

    def test_worker_count_does_not_change_results(self):
        s1 = collect_null_statistics(self.null_config(reps=12), 1, workers=1)
        s2 = collect_null_statistics(self.null_config(reps=12), 1, workers=2)
        assert np.array_equal(s1.statistics, s2.statistics)

    def test_no_sequential_gating(self):
        # Statistics are collected at the step even when earlier steps would
        # have accepted: every replication contributes exactly one value.
        cfg = self.null_config(p=5, true_rank=1, n=150,
                               factor_scales=(4.0,), reps=15)
        sample = collect_null_statistics(cfg, 2)
        assert sample.k == 2
        assert sample.statistics.shape == (15,)


class TestKsDistance:
    def test_point_mass(self):
        assert ks_distance(np.full(100, 0.5)) == pytest.approx(0.5)

    def test_equispaced_grid(self):
        m = 999
        grid = np.arange(1, m + 1) / (m + 1)
        assert ks_distance(grid) <= 1 / (m + 1) + 1 / m + 1e-12

    def test_seeded_uniform_sample(self):
        rng = np.random.default_rng(123456)
        assert ks_distance(rng.uniform(0.0, 1.0, 1000)) <= 0.06

    def test_accepts_null_sample_wrapper(self):
        cfg = SimulationConfig(p=4, true_rank=0, n=100, reps=3,
                               local_null_tau=0.5, seed=1)
        sample = NullSample(statistics=np.array([0.2, 0.4, 0.9]), k=1, config=cfg)
        assert ks_distance(sample) == ks_distance(np.array([0.2, 0.4, 0.9]))

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            ks_distance(np.array([]))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            ks_distance(np.array([0.5, 1.2]))
        with pytest.raises(ValidationError):
            ks_distance(np.array([0.5, np.nan]))

    def test_extremes(self):
        # A point mass at either end is as far from uniform as possible: the
        # empirical CDF disagrees with the identity by 1 at one endpoint.
        assert ks_distance(np.zeros(10)) == pytest.approx(1.0)
        assert ks_distance(np.ones(10)) == pytest.approx(1.0)


class TestKsPvalue:
    def test_bounds_and_monotonicity(self):
        values = [ks_pvalue_approx(d, 1000) for d in (0.01, 0.03, 0.06, 0.2)]
        assert all(0.0 <= v <= 1.0 for v in values)
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_tiny_distance_is_no_evidence(self):
        assert ks_pvalue_approx(0.001, 100) == 1.0

    def test_rejects_bad_sample_size(self):
        with pytest.raises(ValidationError):
            ks_pvalue_approx(0.1, 0)

    def test_calibration_on_uniform_draws(self):
        rng = np.random.default_rng(2023)
        d = ks_distance(rng.uniform(0.0, 1.0, 2000))
        assert ks_pvalue_approx(d, 2000) > 0.01
