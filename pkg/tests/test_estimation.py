import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldpfreq import estimation, oneshot, pipeline
from ldpfreq.core import (
    BitsReport,
    ChannelParams,
    Distribution,
    ItemReport,
    MechanismSpec,
    PrivacyBudget,
    SubsetReport,
)
from ldpfreq.errors import (
    DegenerateChannelError,
    EmptyCountsError,
    KindMismatchError,
    ZeroDenominatorError,
)
from ldpfreq.estimation import (
    IbuConfig,
    SupportCounts,
    build_channel,
    count_supports,
    estimate,
    ibu_estimate,
    ibu_log_likelihood,
    mi_estimate,
    mi_estimate_raw,
    observed_distribution,
)


def dist(*probs):
    return Distribution(np.asarray(probs))


class TestCountSupports:
    def test_item_reports(self):
        reports = [ItemReport(0), ItemReport(0), ItemReport(1)]
        spec = MechanismSpec("GRR", 2, PrivacyBudget(1.0))
        c = count_supports(reports, spec, ChannelParams(0.7, 0.3))
        assert list(c.counts) == [2, 1]
        assert c.n == 3

    def test_bits_reports(self):
        reports = [BitsReport(np.array([1, 1, 0])), BitsReport(np.array([0, 1, 0]))]
        spec = MechanismSpec("SUE", 3, PrivacyBudget(1.0))
        c = count_supports(reports, spec, ChannelParams(0.7, 0.3))
        assert list(c.counts) == [1, 2, 0]

    def test_subset_total_is_n_omega(self):
        rng = np.random.default_rng(0)
        spec = MechanismSpec("SS", 10, PrivacyBudget(1.0))
        omega = oneshot.ss_omega(1.0, 10)
        reports = [oneshot.ss_client(int(v), 1.0, 10, rng) for v in rng.integers(0, 10, 100)]
        c = count_supports(reports, spec, oneshot.ss_params(1.0, 10))
        assert c.counts.sum() == 100 * omega

    def test_mixed_kinds_rejected(self):
        spec = MechanismSpec("GRR", 2, PrivacyBudget(1.0))
        with pytest.raises(KindMismatchError):
            count_supports([ItemReport(0), SubsetReport((1,))], spec, ChannelParams(0.7, 0.3))


class TestMiEstimate:
    def test_identity_channel_is_empirical_frequency(self):
        c = SupportCounts(np.array([2, 1]), 3)
        est = mi_estimate(c, ChannelParams(1.0, 0.0))
        assert np.allclose(est.probs, [2 / 3, 1 / 3])

    def test_hand_computed_interior(self):
        c = SupportCounts(np.array([60, 40]), 100)
        est = mi_estimate(c, ChannelParams(0.75, 0.25))
        assert np.allclose(est.probs, [0.7, 0.3])

    def test_clipping(self):
        c = SupportCounts(np.array([0, 100]), 100)
        raw = mi_estimate_raw(c, ChannelParams(0.75, 0.25))
        assert np.allclose(raw, [-0.5, 1.5])
        est = mi_estimate(c, ChannelParams(0.75, 0.25))
        assert np.allclose(est.probs, [0.0, 1.0])

    def test_degenerate_channel(self):
        with pytest.raises(ValueError):
            ChannelParams(0.5, 0.5)
        # a hand-built equal pair must also be refused by the estimator
        fake = ChannelParams(0.5001, 0.5)
        object.__setattr__(fake, "q_star", 0.5001)
        with pytest.raises(DegenerateChannelError):
            mi_estimate(SupportCounts(np.array([1, 1]), 2), fake)

    def test_empty(self):
        with pytest.raises(EmptyCountsError):
            mi_estimate(SupportCounts(np.array([0, 0]), 0), ChannelParams(0.7, 0.3))

    @given(
        st.lists(st.integers(min_value=0, max_value=1000), min_size=2, max_size=10),
        st.floats(min_value=0.05, max_value=0.45),
    )
    @settings(max_examples=50, deadline=None)
    def test_always_valid_distribution(self, counts, q):
        counts = np.asarray(counts)
        n = max(int(counts.sum()), 1)
        est = mi_estimate(SupportCounts(counts, n), ChannelParams(1 - q, q))
        assert np.all(est.probs >= 0)
        assert est.probs.sum() == pytest.approx(1.0, abs=1e-9)


class TestChannel:
    def test_identity(self):
        assert np.array_equal(build_channel(ChannelParams(1.0, 0.0), 3), np.eye(3))

    def test_values(self):
        a = build_channel(ChannelParams(0.5, 0.25), 2)
        assert np.array_equal(a, [[0.5, 0.25], [0.25, 0.5]])

    def test_grr_rows_stochastic(self):
        p = oneshot.grr_params(1.0, 7)
        a = build_channel(p, 7)
        assert np.allclose(a.sum(axis=1), 1.0)


class TestObserved:
    def test_simple(self):
        assert np.allclose(observed_distribution(SupportCounts(np.array([2, 1]), 3)).probs, [2 / 3, 1 / 3])
        assert np.allclose(
            observed_distribution(SupportCounts(np.array([5, 5, 10]), 20)).probs, [0.25, 0.25, 0.5]
        )

    def test_empty(self):
        with pytest.raises(EmptyCountsError):
            observed_distribution(SupportCounts(np.array([0, 0]), 5))


class TestIbu:
    def test_identity_channel_immediate(self):
        est, iters, err = ibu_estimate(dist(0.3, 0.7), np.eye(2))
        assert np.allclose(est.probs, [0.3, 0.7])
        assert iters <= 2

    def test_uniform_is_fixed_point(self):
        a = build_channel(ChannelParams(0.75, 0.25), 4)
        est, iters, _ = ibu_estimate(dist(0.25, 0.25, 0.25, 0.25), a)
        assert np.allclose(est.probs, 0.25, atol=1e-12)

    def test_matches_interior_mi(self):
        a = build_channel(ChannelParams(0.75, 0.25), 2)
        est, _, _ = ibu_estimate(dist(0.6, 0.4), a)
        assert np.allclose(est.probs, [0.7, 0.3], atol=1e-6)

    def test_channel_scaling_invariance(self):
        a = build_channel(ChannelParams(0.75, 0.25), 3)
        obs = dist(0.5, 0.3, 0.2)
        e1, _, _ = ibu_estimate(obs, a)
        e2, _, _ = ibu_estimate(obs, 3.7 * a)
        assert np.allclose(e1.probs, e2.probs, atol=1e-14)

    def test_zero_denominator_guard(self):
        a = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(ZeroDenominatorError):
            ibu_estimate(dist(0.5, 0.5), a)

    def test_respects_max_iter(self):
        a = build_channel(ChannelParams(0.55, 0.45), 5)
        _, iters, _ = ibu_estimate(dist(0.3, 0.3, 0.2, 0.1, 0.1), a, IbuConfig(max_iter=3))
        assert iters == 3

    def test_explicit_init(self):
        a = build_channel(ChannelParams(0.75, 0.25), 2)
        est, _, _ = ibu_estimate(dist(0.6, 0.4), a, IbuConfig(init=dist(0.9, 0.1)))
        assert np.allclose(est.probs, [0.7, 0.3], atol=1e-6)

    def test_grid_mle_oracle_k2(self):
        # brute-force the binomial log-likelihood on a 1e-4 grid; the
        # observed vector lives on the row-normalized support channel
        rng = np.random.default_rng(99)
        grid = np.arange(0.0, 1.0 + 1e-9, 1e-4)
        for _ in range(100):
            q = rng.uniform(0.05, 0.45)
            p = rng.uniform(q + 0.1, 0.95)
            obs0 = rng.uniform(0.01, 0.99)
            a = build_channel(ChannelParams(p, q), 2)
            est, _, _ = ibu_estimate(dist(obs0, 1 - obs0), a, IbuConfig(max_iter=100_000))
            pn, qn = p / (p + q), q / (p + q)
            mix0 = grid * pn + (1 - grid) * qn
            ll = obs0 * np.log(mix0) + (1 - obs0) * np.log(1 - mix0)
            oracle = grid[np.argmax(ll)]
            assert abs(est.probs[0] - oracle) < 2e-4

    def test_interior_mi_agreement_random(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(50):
            q = rng.uniform(0.05, 0.45)
            p = rng.uniform(q + 0.1, 0.95)
            f = rng.dirichlet(np.ones(2))
            # exact expected observation; the MI solution in counting form
            # is (obs*(p+q) - q)/(p - q) after support normalization
            obs0 = (f[0] * p + f[1] * q) / (p + q)
            raw0 = (obs0 * (p + q) - q) / (p - q)
            if not (0.001 < raw0 < 0.999):
                continue
            a = build_channel(ChannelParams(p, q), 2)
            est, _, _ = ibu_estimate(dist(obs0, 1 - obs0), a, IbuConfig(max_iter=100_000))
            assert abs(est.probs[0] - raw0) < 1e-6
            checked += 1
        assert checked >= 20

    def test_log_likelihood_monotone(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            k = int(rng.integers(2, 12))
            q = rng.uniform(0.05, 0.4)
            p = rng.uniform(q + 0.05, 0.95)
            a = build_channel(ChannelParams(p, q), k)
            obs = rng.dirichlet(np.ones(k))
            f = np.full(k, 1.0 / k)
            prev = ibu_log_likelihood(f, obs, a)
            for _ in range(200):
                denom = a.T @ f
                f = f * (a @ (obs / denom))
                ll = ibu_log_likelihood(f, obs, a)
                assert ll >= prev - 1e-12
                prev = ll
                # every iterate stays on the simplex
                assert np.all(f >= 0)
                assert f.sum() == pytest.approx(1.0, abs=1e-9)


class TestEstimatePipeline:
    def test_end_to_end_grr(self):
        rng = np.random.default_rng(1)
        spec = MechanismSpec("GRR", 4, PrivacyBudget(2.0))
        reports = [oneshot.grr_client(int(v), 2.0, 4, rng) for v in rng.integers(0, 4, 5000)]
        for name in ("MI", "IBU"):
            res = estimate(reports, spec, name)
            assert np.all(np.abs(res.distribution.probs - 0.25) < 0.05)

    def test_empty_reports(self):
        spec = MechanismSpec("GRR", 4, PrivacyBudget(2.0))
        with pytest.raises(EmptyCountsError):
            estimate([], spec, "MI")

    def test_unknown_estimator(self):
        spec = MechanismSpec("GRR", 4, PrivacyBudget(2.0))
        with pytest.raises(ValueError):
            estimate([ItemReport(0)], spec, "MAP")

    def test_ibu_metadata(self):
        rng = np.random.default_rng(2)
        spec = MechanismSpec("GRR", 3, PrivacyBudget(1.0))
        values = rng.integers(0, 3, 2000)
        out = pipeline.estimate_batch(spec, values, rng)
        assert out["IBU"].iterations >= 1
        assert out["MI"].iterations == 0


class TestMiUnbiasedness:
    @pytest.mark.parametrize("mech", ("GRR", "SUE", "OUE", "SS", "THE", "BLH", "OLH"))
    def test_raw_estimates_average_to_truth(self, mech):
        k, n, runs = 4, 100_000, 200
        spec = MechanismSpec(mech, k, PrivacyBudget(1.0))
        params = pipeline.mechanism_params(spec)
        rng = np.random.default_rng(sum(mech.encode()))
        values = rng.choice(k, size=n, p=[0.45, 0.3, 0.2, 0.05])
        # unbiasedness is relative to the fixed sample in hand
        true = np.bincount(values, minlength=k) / n
        raws = np.empty((runs, k))
        for i in range(runs):
            payload = pipeline.obfuscate_batch(spec, values, rng)
            counts = pipeline.batch_support_counts(spec, payload, params)
            raws[i] = mi_estimate_raw(counts, params)
        mean = raws.mean(axis=0)
        # per-coordinate standard error of the run average
        se = raws.std(axis=0, ddof=1) / math.sqrt(runs)
        assert np.all(np.abs(mean - true) < 3 * se + 1e-4)
