"""Chains: validation, gap computation, sampling distributions."""
import numpy as np
import pytest
from scipy import stats

from matconc import chain
from matconc.errors import ValidationError


def pi_norm(pi, h):
    return np.sqrt(np.sum(pi * h * h))


def random_stochastic(rng, m):
    p = rng.uniform(0.05, 1.0, size=(m, m))
    return p / p.sum(axis=1, keepdims=True)


class TestValidateChain:
    def test_identity_rejected(self):
        with pytest.raises(ValidationError):
            chain.validate_chain(np.eye(2))

    def test_iid_chain(self):
        p = np.outer(np.ones(2), [0.5, 0.5])
        c = chain.validate_chain(p)
        assert np.allclose(c.pi, [0.5, 0.5])
        assert c.lam == pytest.approx(0.0, abs=1e-12)

    def test_non_stochastic_rejected(self):
        with pytest.raises(ValidationError):
            chain.validate_chain(np.array([[0.5, 0.6], [0.5, 0.5]]))
        with pytest.raises(ValidationError):
            chain.validate_chain(np.array([[1.5, -0.5], [0.5, 0.5]]))

    def test_power_iteration_oracle(self):
        rng = np.random.default_rng(0)
        p = random_stochastic(rng, 4)
        c = chain.validate_chain(p)
        x = np.full(4, 0.25)
        for _ in range(20000):
            x = x @ p
            x /= x.sum()
        assert np.abs(c.pi - x).max() < 1e-10

    def test_reducible_rejected(self):
        p = np.array([
            [0.5, 0.5, 0.0, 0.0],
            [0.5, 0.5, 0.0, 0.0],
            [0.0, 0.0, 0.5, 0.5],
            [0.0, 0.0, 0.5, 0.5],
        ])
        with pytest.raises(ValidationError):
            chain.validate_chain(p)


class TestStationary:
    def test_doubly_stochastic_uniform(self):
        p = np.array([[0.2, 0.8], [0.8, 0.2]])
        assert np.allclose(chain.stationary_distribution(p), [0.5, 0.5], atol=1e-12)

    def test_two_state_closed_form(self):
        p_, q_ = 0.3, 0.45
        p = np.array([[1 - p_, p_], [q_, 1 - q_]])
        want = np.array([q_ / (p_ + q_), p_ / (p_ + q_)])
        assert np.abs(chain.stationary_distribution(p) - want).max() < 1e-12

    def test_five_state_power_iteration(self):
        rng = np.random.default_rng(1)
        p = random_stochastic(rng, 5)
        pi = chain.stationary_distribution(p)
        x = np.full(5, 0.2)
        for _ in range(100000):
            y = x @ p
            y /= y.sum()
            if np.abs(y - x).max() < 1e-15:
                x = y
                break
            x = y
        assert np.abs(pi - x).max() < 1e-10


class TestSpectralGap:
    def test_leon_perron_gap_is_hold_probability(self):
        rng = np.random.default_rng(2)
        for c_hold in np.arange(0.0, 0.95, 0.1):
            pi = rng.uniform(0.2, 1.0, size=3)
            pi /= pi.sum()
            lp = chain.leon_perron(pi, c_hold)
            assert lp.lam == pytest.approx(c_hold, abs=1e-10)

    def test_iid_gap_zero(self):
        pi = np.array([0.3, 0.7])
        p = np.outer(np.ones(2), pi)
        assert chain.absolute_spectral_gap(p, pi) == pytest.approx(0.0, abs=1e-12)

    def test_reversible_eigenvalue_oracle(self):
        rng = np.random.default_rng(3)
        # build a reversible chain from a symmetric weight matrix
        w = rng.uniform(0.1, 1.0, size=(4, 4))
        w = 0.5 * (w + w.T)
        p = w / w.sum(axis=1, keepdims=True)
        pi = w.sum(axis=1) / w.sum()
        lam = chain.absolute_spectral_gap(p, pi)
        root = np.sqrt(pi)
        sym = (root[:, None] * p) / root[None, :]
        eigs = np.sort(np.abs(np.linalg.eigvalsh(sym)))
        assert lam == pytest.approx(eigs[-2], abs=1e-10)

    def test_jensen_contraction(self):
        rng = np.random.default_rng(4)
        c = chain.validate_chain(random_stochastic(rng, 5))
        assert c.lam < 1.0
        for _ in range(100):
            h = rng.normal(size=5)
            assert pi_norm(c.pi, c.P @ h) <= pi_norm(c.pi, h) + 1e-12


class TestLeonPerron:
    def test_zero_hold_is_iid(self):
        pi = np.array([0.25, 0.75])
        lp = chain.leon_perron(pi, 0.0)
        assert np.allclose(lp.P, np.outer(np.ones(2), pi))

    def test_half_hold_uniform(self):
        lp = chain.leon_perron(np.array([0.5, 0.5]), 0.5)
        assert np.allclose(lp.P, [[0.75, 0.25], [0.25, 0.75]])

    def test_rejects_bad_hold(self):
        with pytest.raises(ValidationError):
            chain.leon_perron(np.array([0.5, 0.5]), 1.0)


class TestTwoStateEnvelope:
    def test_symmetric(self):
        _, mu = chain.two_state_hoeffding_chain(-1.0, 1.0, 0.2)
        assert np.allclose(mu, [0.5, 0.5])

    def test_asymmetric(self):
        _, mu = chain.two_state_hoeffding_chain(-1.0, 3.0, 0.2)
        assert np.allclose(mu, [0.75, 0.25])

    def test_kernel_values(self):
        q, _ = chain.two_state_hoeffding_chain(-1.0, 1.0, 0.3)
        assert np.allclose(q.P, [[0.65, 0.35], [0.35, 0.65]])

    def test_mean_zero_exact(self):
        _, mu = chain.two_state_hoeffding_chain(-0.7, 1.9, 0.4)
        assert mu[0] * (-0.7) + mu[1] * 1.9 == pytest.approx(0.0, abs=1e-15)

    def test_rejects_one_sided(self):
        with pytest.raises(ValidationError):
            chain.two_state_hoeffding_chain(0.5, 1.0, 0.2)
        with pytest.raises(ValidationError):
            chain.two_state_hoeffding_chain(-1.0, -0.1, 0.2)


class TestSampling:
    def test_single_draw(self):
        lp = chain.leon_perron(np.array([0.5, 0.5]), 0.3)
        t = chain.sample_trajectory(lp, 1, seed=9)
        assert t.states.shape == (1,)

    def test_determinism(self):
        rng = np.random.default_rng(5)
        c = chain.validate_chain(random_stochastic(rng, 3))
        a = chain.sample_trajectory(c, 50, seed=123)
        b = chain.sample_trajectory(c, 50, seed=123)
        assert np.array_equal(a.states, b.states)
        assert not np.array_equal(
            a.states, chain.sample_trajectory(c, 50, seed=124).states)

    def test_frequencies_match_pi(self):
        pi = np.array([0.3, 0.7])
        lp = chain.leon_perron(pi, 0.0)
        states = chain.sample_trajectory_batch(lp, 1, 100000, seed=6).ravel()
        for x in range(2):
            p_hat = (states == x).mean()
            sigma = np.sqrt(pi[x] * (1 - pi[x]) / len(states))
            assert abs(p_hat - pi[x]) < 3 * sigma + 1e-9

    def test_custom_initial(self):
        lp = chain.leon_perron(np.array([0.5, 0.5]), 0.0)
        t = chain.sample_trajectory(lp, 3, seed=0, initial=[1.0, 0.0])
        assert t.states[0] == 0
        with pytest.raises(ValidationError):
            chain.sample_trajectory(lp, 3, seed=0, initial=[0.7, 0.7])


class TestCoupledSampler:
    def test_zero_hold_is_iid(self):
        pi = np.array([0.4, 0.6])
        _, draws, _, states = chain.leon_perron_coupled_batch(pi, 0.0, 8, 100, seed=7)
        assert np.array_equal(states, draws)

    def test_determinism(self):
        pi = np.array([0.4, 0.6])
        a = chain.leon_perron_coupled_sample(pi, 0.5, 40, seed=11)
        b = chain.leon_perron_coupled_sample(pi, 0.5, 40, seed=11)
        assert np.array_equal(a.states, b.states)

    @pytest.mark.parametrize("lam", [0.2, 0.5, 0.8])
    def test_pairwise_transition_frequencies(self, lam):
        pi = np.array([0.35, 0.65])
        n, trials = 20, 5000
        _, _, _, states = chain.leon_perron_coupled_batch(pi, lam, n, trials, seed=13)
        kernel = lam * np.eye(2) + (1 - lam) * np.outer(np.ones(2), pi)
        prev = states[:, :-1].ravel()
        nxt = states[:, 1:].ravel()
        for x in range(2):
            mask = prev == x
            count = mask.sum()
            for y in range(2):
                p_hat = (nxt[mask] == y).mean()
                sigma = np.sqrt(kernel[x, y] * (1 - kernel[x, y]) / count)
                assert abs(p_hat - kernel[x, y]) < 3 * sigma + 1e-9

    def test_matches_kernel_sampler_chi_square(self):
        # same Leon-Perron chain, two samplers: state frequencies must be
        # indistinguishable at the 1% level on 1e5 samples
        pi = np.array([0.25, 0.35, 0.4])
        lam = 0.45
        lp = chain.leon_perron(pi, lam)
        n, trials = 10, 10000
        s1 = chain.sample_trajectory_batch(lp, n, trials, seed=17).ravel()
        _, _, _, s2 = chain.leon_perron_coupled_batch(pi, lam, n, trials, seed=18)
        s2 = s2.ravel()
        table = np.stack([np.bincount(s1, minlength=3), np.bincount(s2, minlength=3)])
        _, p_value, _, _ = stats.chi2_contingency(table)
        assert p_value > 0.01


class TestRadonNikodym:
    def test_equal_measures(self):
        pi = np.array([0.5, 0.5])
        for p in (1.0, 2.0, 3.5):
            assert chain.radon_nikodym_norm(pi, pi, p) == pytest.approx(1.0)

    def test_point_mass(self):
        nu = np.array([1.0, 0.0])
        pi = np.array([0.5, 0.5])
        assert chain.radon_nikodym_norm(nu, pi, 1.0) == pytest.approx(1.0)
        assert chain.radon_nikodym_norm(nu, pi, 2.0) == pytest.approx(np.sqrt(2.0))

    def test_rejects_bad_order(self):
        with pytest.raises(ValidationError):
            chain.radon_nikodym_norm(np.array([1.0, 0.0]), np.array([0.5, 0.5]), 0.5)
