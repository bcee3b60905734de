import numpy as np
import pytest

from ifpt.errors import InvalidParameterError
from ifpt.montecarlo import McConfig, survival_mc
from ifpt.pricing import (MarketModel, PayoffSpec, conditional_price, lognormal_price,
                          price_claim, recover_driver)

T = 2.0
MARKET = MarketModel(X0=100.0, mu=0.05, sigma=0.2, rho=0.5)
CALL = PayoffSpec("call", K=100.0)
CFG = McConfig(paths=20_000, seed=11)


@pytest.fixture(scope="module")
def setup(short_problem, short_solution):
    return short_solution, short_problem.density, short_problem.kernel


def price(setup, lam=1.0, market=MARKET, payoff=CALL, cfg=CFG):
    b, f, k = setup
    return price_claim(b, f, lam, k, market, payoff, T, cfg)


class TestPayoff:
    def test_values(self):
        X = np.array([80.0, 100.0, 120.0])
        np.testing.assert_array_equal(CALL(X), [0, 0, 20])
        np.testing.assert_array_equal(PayoffSpec("put", K=100.0)(X), [20, 0, 0])
        np.testing.assert_array_equal(PayoffSpec("digital", K=100.0)(X), [0, 0, 1])
        np.testing.assert_array_equal(PayoffSpec("unit")(X), [1, 1, 1])
        np.testing.assert_array_equal(PayoffSpec("custom", func=np.sqrt)(X), np.sqrt(X))

    @pytest.mark.parametrize("spec", [PayoffSpec("swap"), PayoffSpec("call"),
                                      PayoffSpec("put", K=-1.0), PayoffSpec("custom")])
    def test_invalid(self, spec):
        with pytest.raises(InvalidParameterError):
            spec.validate()

    def test_closed_form_parity(self):
        m = MarketModel(100.0, 0.03, 0.25)
        c = lognormal_price(m, PayoffSpec("call", K=90.0), 1.5)
        p = lognormal_price(m, PayoffSpec("put", K=90.0), 1.5)
        assert c - p == pytest.approx(100.0 * np.exp(0.045) - 90.0, rel=1e-13)


class TestMarket:
    @pytest.mark.parametrize("kw", [{"X0": 0.0}, {"sigma": 0.0}, {"rho": 1.5},
                                    {"mu": float("nan")}])
    def test_invalid(self, kw):
        args = {"X0": 100.0, "mu": 0.0, "sigma": 0.2, **kw}
        with pytest.raises(InvalidParameterError):
            MarketModel(**args).validate()

    def test_driver_round_trip(self):
        t = np.linspace(0, 1, 11)
        W = np.sin(3 * t) * 0.4
        X = MARKET.X0 * np.exp((MARKET.mu - 0.02) * t + 0.2 * W)
        np.testing.assert_allclose(recover_driver(MARKET, t, X), W, atol=1e-13)
        with pytest.raises(InvalidParameterError):
            recover_driver(MARKET, t, -X)


class TestPriceClaim:
    def test_no_killing_is_lognormal(self, setup):
        res = price(setup, lam=0.0, cfg=McConfig(paths=100_000, seed=2))
        assert abs(res.price - lognormal_price(MARKET, CALL, T)) < 3 * res.se

    def test_unit_claim_is_survival(self, setup):
        b, f, k = setup
        res = price(setup, payoff=PayoffSpec("unit"))
        est = survival_mc(b, f, 1.0, k, T, CFG)
        assert res.price == est.S_hat[-1]
        assert res.se == pytest.approx(est.se[-1], rel=1e-12)

    def test_independent_factorisation(self, setup):
        m0 = MarketModel(100.0, 0.05, 0.2, rho=0.0)
        res = price(setup, market=m0, cfg=McConfig(paths=100_000, seed=5))
        target = lognormal_price(m0, CALL, T) * np.exp(-0.25 * T)
        assert abs(res.price - target) < 4 * res.se + 1e-3 * target

    def test_monotone_in_rate(self, setup):
        prices = [price(setup, lam=lam).price for lam in (0.0, 0.5, 1.0, 2.0)]
        assert np.all(np.diff(prices) < 0)

    @pytest.mark.parametrize("rho", [-1.0, 1.0])
    def test_perfect_correlation(self, setup, rho):
        m = MarketModel(100.0, 0.05, 0.2, rho=rho)
        res = price(setup, market=m, payoff=PayoffSpec("digital", K=100.0))
        assert 0 < res.price < 1 and np.isfinite(res.se)

    def test_correlation_sign_matters(self, setup):
        # with rho > 0 the asset rises on paths that drift away from the barrier
        up = price(setup, market=MarketModel(100.0, 0.05, 0.2, 0.9))
        down = price(setup, market=MarketModel(100.0, 0.05, 0.2, -0.9))
        assert up.price - down.price > 3 * np.hypot(up.se, down.se)

    def test_reproducible(self, setup):
        assert price(setup) == price(setup)
        assert price(setup).to_json() == {"price": price(setup).price,
                                          "se": price(setup).se, "paths": 20_000}


class TestConditional:
    def cond(self, setup, times, prices, t, market=MARKET, payoff=CALL, cfg=CFG, **kw):
        b, f, k = setup
        return conditional_price(b, f, 1.0, k, market, payoff, times, prices, t, T, cfg, **kw)

    def test_origin_reproduces_unconditional(self, setup):
        res = self.cond(setup, [0.0], [MARKET.X0], 0.0)
        ref = price(setup)
        assert res.price == pytest.approx(ref.price, rel=1e-12)
        assert res.survival == 1.0 and res.survival_se == 0.0

    def test_independent_denominator_is_survival(self, setup):
        b, f, k = setup
        m0 = MarketModel(100.0, 0.05, 0.2, rho=0.0)
        t = 1.0
        times = np.arange(257) / 256
        prices = m0.X0 * np.exp(0.01 * np.sin(7 * times))
        res = self.cond(setup, times, prices, t, market=m0)
        est = survival_mc(b, f, 1.0, k, T, CFG)
        S, se = est.at(t)
        assert res.survival == pytest.approx(S, rel=1e-12)
        assert res.survival_se == pytest.approx(se, rel=1e-9)

    def test_unit_claim_is_a_probability(self, setup):
        times = np.linspace(0.0, 1.0, 65)
        prices = MARKET.X0 * np.exp(0.1 * times)
        res = self.cond(setup, times, prices, 1.0, payoff=PayoffSpec("unit"), inner=2)
        assert 0 < res.price <= 1
        # survival conditional on survival to t: roughly exp(-nu (T - t))
        assert res.price == pytest.approx(np.exp(-0.25), abs=0.05)
        assert set(res.to_json()) == {"price", "se", "paths", "survival", "survival_se"}

    def test_higher_observed_price_raises_call(self, setup):
        times = np.linspace(0.0, 1.0, 65)
        low = self.cond(setup, times, MARKET.X0 * np.exp(-0.1 * times), 1.0)
        high = self.cond(setup, times, MARKET.X0 * np.exp(0.1 * times), 1.0)
        assert high.price > low.price

    @pytest.mark.parametrize("times,prices,t", [
        ([0.1, 1.0], [100.0, 101.0], 1.0),
        ([0.0, 0.5], [100.0, 101.0], 1.0),
        ([0.0, 1.0], [100.0, -1.0], 1.0),
        ([0.0, 1.0], [90.0, 101.0], 1.0),
        ([0.0, 2.0], [100.0, 101.0], 2.0),
        ([0.0, 1.001], [100.0, 101.0], 1.001),
    ])
    def test_invalid_observations(self, setup, times, prices, t):
        with pytest.raises(InvalidParameterError):
            self.cond(setup, times, prices, t)

    def test_invalid_inner(self, setup):
        with pytest.raises(InvalidParameterError):
            self.cond(setup, [0.0], [100.0], 0.0, inner=0)
