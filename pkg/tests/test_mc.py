"""Monte Carlo layer: estimators, oracles, targeted checks, full suite."""
import math

import numpy as np
import pytest

from matconc import lift, mc
from matconc.chain import leon_perron
from matconc.errors import NumericError, ValidationError
from matconc.instances import centered_blocks, random_chain, tiny_instance


@pytest.fixture(scope="module")
def tiny():
    return tiny_instance(np.random.default_rng(42))


class TestEstimateTail:
    def test_extreme_thresholds(self, tiny):
        low = mc.estimate_tail(tiny.chain, tiny.obs, -1e9, 200, seed=0)
        assert low.point == 1.0
        high = mc.estimate_tail(tiny.chain, tiny.obs, 1e9, 200, seed=0)
        assert high.point == 0.0

    def test_needs_trials(self, tiny):
        with pytest.raises(ValidationError):
            mc.estimate_tail(tiny.chain, tiny.obs, 0.0, 50, seed=0)

    def test_matches_enumeration_within_ci(self, tiny):
        for t in (0.3, 0.8, 1.5):
            est = mc.estimate_tail(tiny.chain, tiny.obs, t, 30000, seed=3)
            truth = mc.enumerated_tail(tiny.chain, tiny.obs, t)
            assert est.ci_low - 1e-12 <= truth <= est.ci_high + 1e-12

    def test_determinism(self, tiny):
        a = mc.estimate_tail(tiny.chain, tiny.obs, 0.5, 5000, seed=7)
        b = mc.estimate_tail(tiny.chain, tiny.obs, 0.5, 5000, seed=7)
        assert a == b


class TestEstimateMgf:
    def test_zero_theta_exact(self, tiny):
        est = mc.estimate_mgf(tiny.chain, tiny.obs, 0.0, 0.0, 500, seed=1)
        assert est.point == float(tiny.obs.d)
        assert est.ci_low == est.ci_high == est.point

    def test_ci_covers_exact(self, tiny):
        for theta, phi in [(0.3, 0.0), (0.6, 0.8)]:
            est = mc.estimate_mgf(tiny.chain, tiny.obs, theta, phi, 30000, seed=2)
            truth = lift.exact_mgf(tiny.chain, tiny.obs, theta, phi)
            assert est.ci_low <= truth <= est.ci_high

    def test_phase_only_enters_through_cosine(self, tiny):
        a = mc.estimate_mgf(tiny.chain, tiny.obs, 0.5, 0.9, 2000, seed=5)
        b = mc.estimate_mgf(tiny.chain, tiny.obs, 0.5, -0.9, 2000, seed=5)
        assert a.point == pytest.approx(b.point, rel=1e-12)

    def test_overflow_not_clipped(self):
        chn = leon_perron(np.array([0.5, 0.5]), 0.0)
        values = np.stack([np.eye(1), -np.eye(1)])
        obs = lift.make_observable(values, n=4)
        with pytest.raises(NumericError, match="overflow"):
            mc.estimate_mgf(chn, obs, 900.0, 0.0, 200, seed=0)

    def test_calibration(self, tiny):
        # 99% CI should cover the exact value in at least 95 of 100 runs
        z99 = 2.5758293035489004
        theta, phi = 0.4, 0.3
        truth = lift.exact_mgf(tiny.chain, tiny.obs, theta, phi)
        covered = 0
        for seed in range(100):
            est = mc.estimate_mgf(tiny.chain, tiny.obs, theta, phi, 2000, seed=seed)
            half = (est.ci_high - est.ci_low) / 2.0 * z99 / 1.959963984540054
            mid = (est.ci_high + est.ci_low) / 2.0
            if mid - half <= truth <= mid + half:
                covered += 1
        assert covered >= 95


class TestOracles:
    def test_enumerated_mgf_agrees_with_transfer(self, tiny):
        for theta, phi in [(0.2, 0.0), (0.5, -0.7), (0.9, 1.2)]:
            fast = lift.exact_mgf(tiny.chain, tiny.obs, theta, phi)
            slow = mc.enumerated_mgf(tiny.chain, tiny.obs, theta, phi)
            assert fast == pytest.approx(slow, rel=1e-10)

    def test_scalar_transfer_iid(self):
        # iid chain: the transfer product equals the product of step MGFs
        pi = np.array([0.3, 0.7])
        chn = leon_perron(pi, 0.0)
        f = np.array([1.0, -1.0])
        f = f - float(pi @ f)
        theta, n = 0.6, 5
        step = float(pi @ np.exp(theta * f))
        got = mc.scalar_transfer_mgf(chn, f, theta, n)
        assert got == pytest.approx(step**n, rel=1e-12)

    def test_commuting_reduction(self):
        rng = np.random.default_rng(9)
        chn = random_chain(rng, m=3)
        f = rng.normal(size=3)
        f -= float(chn.pi @ f)
        d, n = 3, 4
        obs = lift.make_observable(np.stack([v * np.eye(d) for v in f]), n=n)
        for theta, phi in [(0.5, 0.0), (0.8, 1.0)]:
            got = lift.exact_mgf(chn, obs, theta, phi)
            want = d * mc.scalar_transfer_mgf(chn, f, theta * math.cos(phi), n)
            assert got == pytest.approx(want, rel=1e-10)


class TestPipelineDominatesTruth:
    def test_chernoff_pipeline_above_enumerated_tail(self, tiny):
        from matconc import bounds as bnd
        params = bnd.HoeffdingParams(tiny.obs.d, tiny.chain.lam,
                                     tiny.obs.hoeffding_bounds)
        for t in (0.2, 0.6, 1.2, 2.5):
            pipe = bnd.gt_tail_pipeline(
                lambda th: bnd.hoeffding_mgf_bound(params, th), params.d, t)
            truth = mc.enumerated_tail(tiny.chain, tiny.obs, t)
            assert pipe.value >= truth - 1e-12


class TestTailCalibration:
    def test_99_percent_interval_covers_enumerated_tail(self, tiny):
        z99 = 2.5758293035489004
        t = 0.6
        truth = mc.enumerated_tail(tiny.chain, tiny.obs, t)
        covered = 0
        for seed in range(100):
            est = mc.estimate_tail(tiny.chain, tiny.obs, t, 2000, seed=seed)
            lo, hi = mc.wilson_interval(round(est.point * est.trials),
                                        est.trials, z=z99)
            if lo <= truth <= hi:
                covered += 1
        assert covered >= 95


class TestAsymptoticVariance:
    def test_iid_case(self):
        pi = np.array([0.5, 0.5])
        f = np.array([1.0, -1.0])
        rep = mc.asymptotic_variance_check(pi, 0.0, f, n=500, trials=8000, seed=21)
        assert rep.target == pytest.approx(1.0)
        assert rep.rel_error < 0.05

    def test_general_gap(self):
        pi = np.array([0.5, 0.5])
        f = np.array([1.0, -1.0])
        rep = mc.asymptotic_variance_check(pi, 0.3, f, n=2000, trials=8000, seed=22)
        assert rep.target == pytest.approx((1.3 / 0.7))
        assert rep.rel_error < 0.05

    def test_mean_zero_required(self):
        with pytest.raises(ValidationError):
            mc.asymptotic_variance_check(
                np.array([0.5, 0.5]), 0.2, np.array([1.0, 0.0]), 100, 1000, 0)


class TestMajorization:
    def test_near_zero_observable(self):
        pi = np.array([0.5, 0.5])
        eps = 1e-6
        values = np.stack([eps * np.eye(2), -eps * np.eye(2)])
        rec = mc.majorization_check(pi, 0.4, values, 0.5, 0.0, n=4,
                                    trials=2000, seed=3)
        assert rec.violations == 0

    def test_scalar_two_point_coupling_is_exact(self):
        # d = 1 with F = (+1, -1) and uniform pi: the coupled chains take
        # identical values, so the two sides coincide trial by trial
        pi = np.array([0.5, 0.5])
        values = np.array([[[1.0]], [[-1.0]]])
        rec = mc.majorization_check(pi, 0.3, values, 0.6, 0.0, n=5,
                                    trials=4000, seed=4)
        assert rec.violations == 0
        assert rec.worst_margin >= 0.0

    def test_random_instance(self):
        rng = np.random.default_rng(11)
        pi = np.array([0.25, 0.45, 0.3])
        values = centered_blocks(rng, pi, 2)
        rec = mc.majorization_check(pi, 0.5, values, 0.5, 0.4, n=6,
                                    trials=30000, seed=12)
        assert rec.violations == 0


class TestTracePowerStep:
    def test_zero_matrices_probe(self):
        cases = [[np.zeros((d, d))] for d in range(1, 9)]
        rec = mc.gt_consequence_check(h_lists=cases, draws=0, seed=0)
        assert rec.violations == 0
        assert abs(rec.worst_margin) < 1e-9  # equality at H = 0
        assert "erratum" in rec.note  # the weaker printed constant fails

    def test_scalar_identity(self):
        rec = mc.gt_consequence_check(h_lists=[[np.array([[0.7]])]], draws=0, seed=0)
        assert rec.violations == 0
        assert abs(rec.worst_margin) < 1e-12

    def test_random_triples(self):
        rec = mc.gt_consequence_check(d=3, k=3, draws=1000, seed=5)
        assert rec.instances_tested == 1000
        assert rec.violations == 0


class TestLimitStudy:
    def test_zero_theta_rows(self):
        rng = np.random.default_rng(13)
        pi = np.array([0.4, 0.6])
        values = centered_blocks(rng, pi, 2)
        rows = mc.limit_convergence_study(pi, 0.3, values, 0.0, (5, 10, 20))
        for row in rows:
            assert row.growth == pytest.approx(math.log(2.0) / row.n, rel=1e-9)
            assert row.log_rho == pytest.approx(0.0, abs=1e-12)

    def test_iid_scalar_is_exact(self):
        pi = np.array([0.5, 0.5])
        values = np.array([[[1.0]], [[-1.0]]])
        rows = mc.limit_convergence_study(pi, 0.0, values, 0.7, (3, 9, 15))
        for row in rows:
            assert row.delta < 1e-12

    def test_rate_cap(self):
        rng = np.random.default_rng(14)
        pi = np.array([0.3, 0.3, 0.4])
        values = centered_blocks(rng, pi, 2)
        rows = mc.limit_convergence_study(pi, 0.45, values, 0.6, (10, 20, 50, 100, 200))
        for row in rows:
            assert row.delta <= row.rate_cap + 1e-8
        # eventually monotone decreasing
        deltas = [row.delta for row in rows[-3:]]
        assert deltas[0] >= deltas[1] >= deltas[2] - 1e-12


class TestVerifyAll:
    def test_empty_suite(self):
        assert mc.verify_all(instance_count=0) == []

    def test_small_suite_clean(self):
        records = mc.verify_all(seed=1, instance_count=6, trials=4000)
        assert all(r.violations == 0 for r in records)
        ids = [r.inequality_id for r in records]
        assert len(ids) == len(set(ids))

    def test_determinism(self):
        a = mc.verify_all(seed=2, instance_count=4, trials=2000)
        b = mc.verify_all(seed=2, instance_count=4, trials=2000)
        assert a == b

    def test_corrupt_hook(self):
        records = mc.verify_all(seed=2, instance_count=4, trials=2000,
                                corrupt="two-state-eta-envelope")
        bad = [r for r in records if r.violations > 0]
        assert len(bad) == 1
        assert bad[0].inequality_id == "two-state-eta-envelope"
        with pytest.raises(ValidationError):
            mc.verify_all(seed=2, instance_count=4, trials=2000, corrupt="nope")
