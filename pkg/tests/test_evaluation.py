import numpy as np
import pytest
from hypothesis import given, strategies as st

from ldpfreq.core import Distribution
from ldpfreq.errors import LengthMismatchError, UnpairedRunsError
from ldpfreq.evaluation import (
    ExperimentResult,
    GainRecord,
    aggregate,
    mae,
    mse,
    utility_gain,
)


def dist(*probs):
    return Distribution(np.asarray(probs))


class TestMetrics:
    def test_identical_is_zero(self):
        d = dist(0.5, 0.5)
        assert mse(d, d) == 0.0
        assert mae(d, d) == 0.0

    def test_hand_values(self):
        assert mse(dist(1, 0), dist(0, 1)) == 1.0
        assert mae(dist(1, 0), dist(0, 1)) == 1.0
        assert mse(dist(0.5, 0.5), dist(0.6, 0.4)) == pytest.approx(0.01)
        assert mae(dist(0.5, 0.5), dist(0.6, 0.4)) == pytest.approx(0.1)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            mse(dist(1, 0), dist(1, 0, 0))
        with pytest.raises(LengthMismatchError):
            mae(dist(1, 0), dist(1, 0, 0))

    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=10**6))
    def test_mse_bounded_by_mae_times_max(self, k, seed):
        rng = np.random.default_rng(seed)
        f = dist(*rng.dirichlet(np.ones(k)))
        g = dist(*rng.dirichlet(np.ones(k)))
        bound = mae(f, g) * np.max(np.abs(f.probs - g.probs))
        assert mse(f, g) <= bound + 1e-15


class TestUtilityGain:
    def test_hand_values(self):
        assert utility_gain(0.02, 0.01) == pytest.approx(50.0)
        assert utility_gain(0.01, 0.02) == 0.0
        assert utility_gain(0.3, 0.3) == 0.0

    def test_zero_baseline_defined_as_zero(self):
        assert utility_gain(0.0, 0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            utility_gain(-0.1, 0.1)

    @given(
        st.floats(min_value=1e-6, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_range_and_scale_invariance(self, a, b, c):
        g = utility_gain(a, b)
        assert 0.0 <= g <= 100.0
        assert utility_gain(c * a, c * b) == pytest.approx(g, abs=1e-9)


def make_result(estimator, seed, mse_val, mae_val, mechanism="GRR", distribution="gaussian"):
    return ExperimentResult(
        mechanism=mechanism,
        estimator=estimator,
        eps=1.0,
        eps_inf=None,
        eps_1=None,
        n=1000,
        k=10,
        distribution=distribution,
        seed=seed,
        mse=mse_val,
        mae=mae_val,
    )


class TestAggregate:
    def test_twenty_identical_runs(self):
        rows = []
        for seed in range(20):
            rows.append(make_result("MI", seed, 0.02, 0.04))
            rows.append(make_result("IBU", seed, 0.01, 0.03))
        records = aggregate(rows)
        assert len(records) == 1
        assert records[0].gamma_mse == pytest.approx(50.0)
        assert records[0].gamma_mae == pytest.approx(25.0)
        assert records[0].runs == 20

    def test_single_run_equals_utility_gain(self):
        records = aggregate([make_result("MI", 0, 0.5, 0.5), make_result("IBU", 0, 0.2, 0.25)])
        assert records[0].gamma_mse == pytest.approx(utility_gain(0.5, 0.2))

    def test_averages_before_gain(self):
        # gains of averages, not averages of gains: mean MI 0.3, mean IBU 0.15
        rows = [
            make_result("MI", 0, 0.5, 0.5),
            make_result("MI", 1, 0.1, 0.1),
            make_result("IBU", 0, 0.25, 0.25),
            make_result("IBU", 1, 0.05, 0.05),
        ]
        assert aggregate(rows)[0].gamma_mse == pytest.approx(50.0)

    def test_empty(self):
        assert aggregate([]) == []

    def test_unpaired_rejected(self):
        with pytest.raises(UnpairedRunsError):
            aggregate([make_result("MI", 0, 0.1, 0.1)])
        with pytest.raises(UnpairedRunsError):
            aggregate(
                [
                    make_result("MI", 0, 0.1, 0.1),
                    make_result("MI", 0, 0.1, 0.1),
                    make_result("IBU", 0, 0.1, 0.1),
                ]
            )

    def test_groups_split_by_key(self):
        rows = []
        for d in ("gaussian", "poisson"):
            rows.append(make_result("MI", 0, 0.2, 0.2, distribution=d))
            rows.append(make_result("IBU", 0, 0.1, 0.1, distribution=d))
        records = aggregate(rows)
        assert len(records) == 2
        assert {r.distribution for r in records} == {"gaussian", "poisson"}


class TestSerialization:
    def test_csv_roundtrip(self):
        r = make_result("MI", 3, 0.123456789, 0.05)
        back = ExperimentResult.from_csv_row(r.to_csv_row())
        assert back == r

    def test_csv_roundtrip_longitudinal_fields(self):
        r = ExperimentResult(
            mechanism="L-GRR",
            estimator="IBU",
            eps=None,
            eps_inf=4.0,
            eps_1=2.0,
            n=10,
            k=2,
            distribution="poisson",
            seed=1,
            mse=0.0,
            mae=0.0,
        )
        assert ExperimentResult.from_csv_row(r.to_csv_row()) == r

    def test_gain_record_bounds(self):
        with pytest.raises(ValueError):
            GainRecord("GRR", 1.0, None, None, 10, 2, "gaussian", 101.0, 0.0, 1)

    def test_negative_metrics_rejected(self):
        with pytest.raises(ValueError):
            make_result("MI", 0, -0.1, 0.1)
