r"""Monte Carlo prices of claims paying ``F(X_T)`` on survival to ``T``.

The asset is a geometric Brownian motion driven by ``W``,

.. math::

    X_t = X_0 \exp\big((\mu - \sigma^2/2)\, t + \sigma W_t\big),

and the credit index is ``Y = Y_0 + B`` with ``d[B, W]_t = \rho\, dt``.
Simulation draws the credit increments first and builds
``W = \rho B + \sqrt{1 - \rho^2} B^\perp`` from an independent stream, so the
killing weights of a pricing run coincide path by path with those of
:func:`~ifpt.montecarlo.survival_mc` for the same seed.  No discounting is
applied.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import InvalidParameterError
from .montecarlo import (KernelTable, McConfig, _initial, _map_chunks, _normals,
                         _pair_mean, _time_mesh, simulate_killing)

__all__ = ["MarketModel", "PayoffSpec", "PriceResult", "ConditionalPriceResult",
           "price_claim", "conditional_price", "recover_driver", "lognormal_price"]


@dataclass(frozen=True)
class MarketModel:
    X0: float
    mu: float
    sigma: float
    rho: float = 0.0

    def validate(self):
        if not (np.isfinite(self.X0) and self.X0 > 0):
            raise InvalidParameterError("X0 must be positive")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidParameterError("sigma must be positive")
        if not np.isfinite(self.mu):
            raise InvalidParameterError("mu must be finite")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidParameterError("correlation rho must lie in [-1, 1]")
        return self

    def terminal(self, X_t, dW, tau):
        """Exact lognormal step over ``tau`` given the Brownian increment ``dW``."""
        return X_t * np.exp((self.mu - 0.5 * self.sigma ** 2) * tau + self.sigma * dW)


@dataclass(frozen=True)
class PayoffSpec:
    """``kind`` is one of ``unit``, ``call``, ``put``, ``digital`` or ``custom``.

    The strike ``K`` is required by call, put and digital (which pays 1 when
    ``X_T > K``); ``func`` maps an array of terminal prices to payoffs for
    ``custom``.
    """

    kind: str
    K: float | None = None
    func: Callable | None = None

    def validate(self):
        if self.kind not in ("unit", "call", "put", "digital", "custom"):
            raise InvalidParameterError(f"unknown payoff kind {self.kind!r}")
        if self.kind in ("call", "put", "digital"):
            if self.K is None or not (np.isfinite(self.K) and self.K > 0):
                raise InvalidParameterError(f"{self.kind} payoff needs a positive strike K")
        if self.kind == "custom" and not callable(self.func):
            raise InvalidParameterError("custom payoff needs a callable func")
        return self

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if self.kind == "unit":
            return np.ones_like(X)
        if self.kind == "call":
            return np.maximum(X - self.K, 0.0)
        if self.kind == "put":
            return np.maximum(self.K - X, 0.0)
        if self.kind == "digital":
            return (X > self.K).astype(float)
        return np.asarray(self.func(X), dtype=float)

    def descriptor(self):
        if self.kind == "custom":
            raise InvalidParameterError("custom payoffs cannot be serialised")
        return {"kind": self.kind} if self.K is None else {"kind": self.kind, "K": self.K}


@dataclass(frozen=True)
class PriceResult:
    price: float
    se: float
    paths: int

    def to_json(self):
        return {"price": self.price, "se": self.se, "paths": self.paths}


@dataclass(frozen=True)
class ConditionalPriceResult(PriceResult):
    #: estimate of the conditional survival probability to ``t`` (ratio denominator)
    survival: float = 1.0
    survival_se: float = 0.0

    def to_json(self):
        out = super().to_json()
        out.update(survival=self.survival, survival_se=self.survival_se)
        return out


def lognormal_price(market: MarketModel, payoff: PayoffSpec, T):
    """Closed-form ``E[F(X_T)]`` for the built-in payoffs (no killing)."""
    m, s = market.mu, market.sigma
    X0 = market.X0
    if payoff.kind == "unit":
        return 1.0
    fwd = X0 * np.exp(m * T)
    v = s * np.sqrt(T)
    d2 = (np.log(X0 / payoff.K) + (m - 0.5 * s * s) * T) / v
    d1 = d2 + v
    if payoff.kind == "call":
        return float(fwd * special.ndtr(d1) - payoff.K * special.ndtr(d2))
    if payoff.kind == "put":
        return float(payoff.K * special.ndtr(-d2) - fwd * special.ndtr(-d1))
    if payoff.kind == "digital":
        return float(special.ndtr(d2))
    raise InvalidParameterError("no closed form for custom payoffs")


def _mean_se(values, antithetic):
    v = _pair_mean(values, antithetic)
    return v.shape[0], float(v.sum()), float(np.dot(v, v))


def _combine(parts):
    n = sum(p[0] for p in parts)
    mean = sum(p[1] for p in parts) / n
    var = max(sum(p[2] for p in parts) / n - mean * mean, 0.0)
    return mean, (np.sqrt(var / (n - 1)) if n > 1 else 0.0)


def price_claim(barrier, density, lam, kernel, market: MarketModel, payoff: PayoffSpec,
                T, cfg: McConfig, table_size=2 ** 16) -> PriceResult:
    """``E[F(X_T) exp(-Lambda_T)]`` with its standard error.

    The credit paths are those of :func:`~ifpt.montecarlo.survival_mc` for
    the same ``cfg``; with ``payoff.kind == "unit"`` the two estimates agree
    exactly.
    """
    cfg.validate()
    market.validate()
    payoff.validate()
    if lam < 0:
        raise InvalidParameterError("lam must be non-negative")
    _, bvals = _time_mesh(barrier, T, cfg.dt_sim)
    table = KernelTable(kernel, table_size)
    rho = market.rho
    perp = np.sqrt(max(1.0 - rho * rho, 0.0))

    def run(n, rngs):
        y0, y, acc = simulate_killing(n, rngs, bvals, cfg.dt_sim, density, lam, table,
                                      cfg.antithetic)
        dW = rho * (y - y0)
        if perp:
            dW = dW + perp * np.sqrt(T) * _normals(rngs[1], n, cfg.antithetic)
        F = payoff(market.terminal(market.X0, dW, T))
        return _mean_se(F * np.exp(-acc), cfg.antithetic)

    price, se = _combine(_map_chunks(run, cfg))
    return PriceResult(float(price), float(se), int(cfg.paths))


def recover_driver(market: MarketModel, times, prices):
    """Brownian path ``W_s = (log X_s - log X_0 + (sigma^2/2 - mu) s) / sigma``."""
    prices = np.asarray(prices, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
        raise InvalidParameterError("observed prices must be positive")
    s = market.sigma
    return (np.log(prices) - np.log(market.X0) + (0.5 * s * s - market.mu) * times) / s


def conditional_price(barrier, density, lam, kernel, market: MarketModel, payoff: PayoffSpec,
                      obs_times, obs_prices, t, T, cfg: McConfig, inner=1,
                      table_size=2 ** 16) -> ConditionalPriceResult:
    """Price at ``t`` given the asset path on ``[0, t]`` and survival to ``t``.

    The estimate is the ratio

    .. math::

        \\frac{E[\\,e^{-\\Lambda_t} K(X_t, Y_t, t) \\mid X_{[0,t]}]}
             {E[\\,e^{-\\Lambda_t} \\mid X_{[0,t]}]},
        \\qquad K = E[F(X_T) e^{-(\\Lambda_T - \\Lambda_t)} \\mid X_t, Y_t],

    On ``[0, t]`` the credit index moves by ``rho dW + sqrt(1 - rho^2) dB_perp``
    with ``W`` recovered from the observations and ``B_perp`` simulated; the
    killing integral uses the observation mesh.  ``K`` is estimated by
    ``inner`` nested continuation paths per outer path, stepped with
    ``cfg.dt_sim``.  The standard error is the delta-method error of the
    ratio over outer paths.

    Parameters
    ----------
    obs_times, obs_prices : array_like
        Observation mesh starting at ``0`` (with price ``X0``) and ending at
        ``t``.  For ``t = 0`` pass ``[0]`` and ``[X0]``.
    """
    cfg.validate()
    market.validate()
    payoff.validate()
    if lam < 0:
        raise InvalidParameterError("lam must be non-negative")
    if int(inner) != inner or inner < 1:
        raise InvalidParameterError("inner must be a positive integer")
    obs_times = np.atleast_1d(np.asarray(obs_times, dtype=float))
    obs_prices = np.atleast_1d(np.asarray(obs_prices, dtype=float))
    if obs_times.shape != obs_prices.shape or obs_times.size < 1:
        raise InvalidParameterError("observed times and prices must have equal, non-zero length")
    if obs_times[0] != 0.0 or np.any(np.diff(obs_times) <= 0):
        raise InvalidParameterError("observation times must start at 0 and increase")
    if abs(obs_times[-1] - t) > 1e-12:
        raise InvalidParameterError("last observation time must equal t")
    W = recover_driver(market, obs_times, obs_prices)
    if not np.isclose(obs_prices[0], market.X0, rtol=1e-12, atol=0):
        raise InvalidParameterError("observed path must start at X0")
    if not t < T:
        raise InvalidParameterError("conditioning time t must be below the maturity T")
    if barrier.times[-1] < T - 1e-9:
        raise InvalidParameterError("barrier shorter than the maturity")
    tau = T - t
    n2 = int(round(tau / cfg.dt_sim))
    if n2 < 1 or abs(n2 * cfg.dt_sim - tau) > 1e-9 * T:
        raise InvalidParameterError("T - t must be an integer multiple of dt_sim")
    b_obs = barrier.barrier_at(obs_times[:-1])
    dW_obs = np.diff(W)
    dt_obs = np.diff(obs_times)
    cont_times = t + tau * np.arange(n2) / n2
    b_cont = barrier.barrier_at(cont_times)
    table = KernelTable(kernel, table_size)
    rho = market.rho
    perp = np.sqrt(max(1.0 - rho * rho, 0.0))
    X_t = float(obs_prices[-1])
    anti = cfg.antithetic

    def run(n, rngs):
        ry, rp, _ = rngs
        y = _initial(density, ry, n, anti)
        acc = np.zeros(n)
        for bk, dw, h in zip(b_obs, dW_obs, dt_obs):
            if lam:
                acc += (lam * h) * table(y - bk)
            y = y + rho * dw
            if perp:
                y += perp * np.sqrt(h) * _normals(ry, n, anti)
        w = np.exp(-acc)
        # nested continuation: `inner` copies of each outer state
        yc = np.repeat(y, inner)
        m = yc.size
        y_start = yc.copy()
        acc2 = np.zeros(m)
        sq = np.sqrt(cfg.dt_sim)
        for bk in b_cont:
            if lam:
                acc2 += (lam * cfg.dt_sim) * table(yc - bk)
            yc += sq * _normals(ry, m, anti)
        dW = rho * (yc - y_start)
        if perp:
            dW = dW + perp * np.sqrt(tau) * _normals(rp, m, anti)
        Kc = (payoff(market.terminal(X_t, dW, tau)) * np.exp(-acc2)).reshape(n, inner).mean(1)
        a = _pair_mean(w * Kc, anti)
        c = _pair_mean(w, anti)
        return a, c

    parts = _map_chunks(run, cfg)
    a = np.concatenate([p[0] for p in parts])
    c = np.concatenate([p[1] for p in parts])
    n = a.size
    a_bar, c_bar = a.mean(), c.mean()
    price = a_bar / c_bar
    if n > 1:
        resid = a - price * c
        se = float(np.sqrt(np.dot(resid - resid.mean(), resid - resid.mean()) / (n - 1) / n) / c_bar)
        c_se = float(np.sqrt(np.dot(c - c_bar, c - c_bar) / (n - 1) / n))
    else:
        se = c_se = 0.0
    return ConditionalPriceResult(float(price), se, int(cfg.paths), float(c_bar), c_se)
