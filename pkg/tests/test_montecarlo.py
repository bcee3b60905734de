from dataclasses import dataclass

import numpy as np
import pytest
from scipy import stats

from ifpt.errors import InvalidParameterError
from ifpt.kernel import build_mollifier_pair
from ifpt.montecarlo import (KernelTable, McConfig, empirical_survival, sample_default_times,
                             survival_mc)
from ifpt.survival import GaussianDensity

L = 16.0


@dataclass
class FlatBarrier:
    """Constant barrier with the interface the simulator reads."""

    level: float
    T: float

    @property
    def times(self):
        return np.array([0.0, self.T])

    def barrier_at(self, t):
        return np.full(np.shape(t), self.level)


@pytest.fixture(scope="module")
def mc_run(base_problem, base_solution):
    p = base_problem
    cfg = McConfig(paths=20_000, seed=7)
    est = survival_mc(base_solution, p.density, 1.0, p.kernel, 8.0, cfg)
    dts, weights = sample_default_times(base_solution, p.density, 1.0, p.kernel, 8.0, cfg,
                                        with_weights=True)
    return est, dts, weights


class TestConfig:
    @pytest.mark.parametrize("kw", [{"paths": 0}, {"dt_sim": 0.0}, {"chunk": 3},
                                    {"antithetic": True, "paths": 11}, {"threads": 0},
                                    {"seed": -1}])
    def test_rejects(self, kw):
        with pytest.raises(InvalidParameterError):
            McConfig(**kw).validate()

    def test_chunks(self):
        assert McConfig(paths=20_000, chunk=8192).chunks() == [8192, 8192, 3616]


class TestKernelTable:
    def test_interpolation_error(self, base_problem):
        k = base_problem.kernel
        t = KernelTable(k, 2 ** 16)
        x = np.linspace(-20, 20, 10_001)
        assert np.abs(t(x) - k.eval(x)).max() < 1e-5

    def test_periodic(self, base_problem):
        t = KernelTable(base_problem.kernel, 2 ** 12)
        x = np.linspace(-3, 3, 101)
        np.testing.assert_allclose(t(x + L), t(x), atol=1e-12)


class TestSurvival:
    def test_no_killing(self, short_problem, short_solution):
        p = short_problem
        est = survival_mc(short_solution, p.density, 0.0, p.kernel, 2.0, McConfig(paths=1000))
        assert np.all(est.S_hat == 1.0) and np.all(est.se == 0.0)
        d = sample_default_times(short_solution, p.density, 0.0, p.kernel, 2.0,
                                 McConfig(paths=1000))
        assert d.censored.all() and np.all(d.tau == 2.0)

    def test_constant_killing_on_plateau(self):
        # the over-kernel is exactly one on (-L/2 + eps, 0]; paths started
        # L/4 below the barrier stay there over a short horizon
        k = build_mollifier_pair(0.1, L).over
        est = survival_mc(FlatBarrier(L / 4, 0.5), GaussianDensity(0.0, 0.25), 0.7, k, 0.5,
                          McConfig(paths=4000, dt_sim=1 / 64))
        np.testing.assert_allclose(est.S_hat, np.exp(-0.7 * est.times), rtol=1e-12)
        # only the round-off of the one-pass variance formula remains
        assert est.se.max() < 1e-8

    def test_matches_target(self, mc_run):
        est = mc_run[0]
        for t in (1.0, 4.0, 8.0):
            S, se = est.at(t)
            assert abs(S - np.exp(-0.25 * t)) < 4 * se + 1e-3

    def test_starts_at_one_and_decreases(self, mc_run):
        est = mc_run[0]
        assert est.S_hat[0] == 1.0 and est.se[0] == 0.0
        assert np.all(np.diff(est.S_hat) <= 0)
        assert est.table().keys() == {"t", "S_hat", "se"}

    def test_reproducible_and_thread_invariant(self, short_problem, short_solution):
        p = short_problem
        cfg = McConfig(paths=20_000, seed=3)
        a = sample_default_times(short_solution, p.density, 1.0, p.kernel, 2.0, cfg)
        b = sample_default_times(short_solution, p.density, 1.0, p.kernel, 2.0,
                                 McConfig(paths=20_000, seed=3, threads=3))
        np.testing.assert_array_equal(a.tau, b.tau)
        s1 = survival_mc(short_solution, p.density, 1.0, p.kernel, 2.0, cfg)
        s2 = survival_mc(short_solution, p.density, 1.0, p.kernel, 2.0,
                         McConfig(paths=20_000, seed=3, threads=2))
        np.testing.assert_array_equal(s1.S_hat, s2.S_hat)
        s3 = survival_mc(short_solution, p.density, 1.0, p.kernel, 2.0,
                         McConfig(paths=20_000, seed=4))
        assert not np.array_equal(s1.S_hat, s3.S_hat)

    def test_antithetic(self, short_problem, short_solution):
        p = short_problem
        plain = survival_mc(short_solution, p.density, 1.0, p.kernel, 2.0,
                            McConfig(paths=20_000))
        anti = survival_mc(short_solution, p.density, 1.0, p.kernel, 2.0,
                           McConfig(paths=20_000, antithetic=True))
        S, se = anti.at(2.0)
        assert abs(S - np.exp(-0.5)) < 4 * se + 1e-3
        assert se < plain.at(2.0)[1]

    def test_left_point_rule_first_order(self, short_problem, short_solution):
        p = short_problem
        bias = []
        for d in (1 / 2, 1 / 4, 1 / 8):
            est = survival_mc(short_solution, p.density, 1.0, p.kernel, 2.0,
                              McConfig(paths=400_000, dt_sim=d))
            bias.append(est.at(2.0)[0] - np.exp(-0.5))
        assert bias[0] > bias[1] > bias[2] > 0
        for b1, b2 in zip(bias, bias[1:]):
            assert 1.5 < b1 / b2 < 3.5

    def test_barrier_too_short(self, short_problem, short_solution):
        p = short_problem
        with pytest.raises(InvalidParameterError):
            survival_mc(short_solution, p.density, 1.0, p.kernel, 4.0, McConfig(paths=100))

    def test_horizon_off_mesh(self, short_problem, short_solution):
        p = short_problem
        with pytest.raises(InvalidParameterError):
            survival_mc(short_solution, p.density, 1.0, p.kernel, 1.001, McConfig(paths=100))


class TestDefaultTimes:
    def test_exponential_law(self, mc_run):
        d = mc_run[1]
        T, nu = 8.0, 0.25
        tau = d.tau[~d.censored]
        cdf = lambda t: (1 - np.exp(-nu * t)) / (1 - np.exp(-nu * T))
        assert stats.kstest(tau, cdf).pvalue > 0.01
        assert d.censored.mean() == pytest.approx(np.exp(-nu * T), abs=0.015)

    def test_empirical_curve(self, mc_run):
        est, d, _ = mc_run
        t = np.array([1.0, 2.0, 4.0, 8.0])
        emp = empirical_survival(d, t)
        assert np.abs(emp - np.exp(-0.25 * t)).max() < 0.015
        assert empirical_survival(d, [0.0])[0] == 1.0

    def test_conditioning_reduces_variance(self, mc_run):
        est, d, w = mc_run
        # exp(-Lambda_T) is the conditional expectation of the survival indicator
        assert w.mean() == pytest.approx(est.S_hat[-1], rel=1e-12)
        assert np.var(w) < np.var(d.censored.astype(float))
        assert abs(w.mean() - d.censored.mean()) < 0.015

    def test_table(self, mc_run):
        tab = mc_run[1].table()
        assert list(tab) == ["tau", "censored"]
        assert tab["censored"].dtype.kind == "i"
