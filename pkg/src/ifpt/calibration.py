"""CDS bootstrap of a piecewise constant hazard curve and the stitched barrier.

Quote ``j`` covers the segment ``[T_{j-1}, T_j]`` with payment dates
``t_{k(j-1)} = T_{j-1} < ... < t_{k(j)} = T_j``.  With the survival curve
known up to ``T_{j-1}`` and a constant hazard ``h`` on the segment, its legs
are

* premium: ``upfront + running * sum_{i=k(j-1)}^{k(j)-1} delta_i p0(t_i) G(t_i)``
* protection: ``(1 - R) * sum_{i=k(j-1)+1}^{k(j)} p0(t_i) (G(t_{i-1}) - G(t_i))``

and the bootstrap solves premium = protection for ``h`` one segment at a
time.  No accrual on default is paid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .barrier import IfptProblem, solve_restarted
from .errors import InvalidParameterError, UnbootstrappableQuoteError
from .survival import PiecewiseHazardSurvival, make_piecewise_hazard

__all__ = ["CdsQuote", "DiscountCurve", "RecoveryRate", "cds_leg_values",
           "bootstrap_hazard", "fair_running_premium", "synthetic_quotes",
           "stitch_barrier", "leg_residuals"]


@dataclass(frozen=True)
class CdsQuote:
    """Quote for segment ``j``; ``accruals[i]`` belongs to ``payment_times[i]``.

    ``payment_times`` runs from the previous maturity to ``T`` inclusive and
    ``accruals`` has one entry fewer (the last date carries no premium).
    """

    j: int
    T: float
    upfront: float
    running: float
    payment_times: tuple
    accruals: tuple

    def validate(self, T_prev):
        t = np.asarray(self.payment_times, dtype=float)
        d = np.asarray(self.accruals, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise InvalidParameterError(f"quote {self.j}: need at least two payment times")
        if d.shape != (t.size - 1,):
            raise InvalidParameterError(
                f"quote {self.j}: expected {t.size - 1} accrual factors, got {d.size}")
        if np.any(np.diff(t) <= 0):
            raise InvalidParameterError(f"quote {self.j}: payment times must increase")
        if not np.isclose(t[0], T_prev, rtol=0, atol=1e-12):
            raise InvalidParameterError(
                f"quote {self.j}: first payment time {t[0]} differs from the previous maturity {T_prev}")
        if not np.isclose(t[-1], self.T, rtol=0, atol=1e-12):
            raise InvalidParameterError(f"quote {self.j}: maturity must be the last payment time")
        if np.any(d <= 0):
            raise InvalidParameterError(f"quote {self.j}: accrual factors must be positive")
        if self.upfront < 0 or self.running < 0:
            raise InvalidParameterError(f"quote {self.j}: premiums must be non-negative")
        return self


class DiscountCurve:
    """Zero-coupon bond prices ``p0(t)``, log-linear between nodes.

    Beyond the last node the last forward rate is extended flat.
    """

    def __init__(self, times, values):
        t = np.asarray(times, dtype=float)
        p = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != p.shape or t.size < 1:
            raise InvalidParameterError("discount curve needs matching time and price arrays")
        if t[0] != 0.0 or p[0] != 1.0:
            raise InvalidParameterError("discount curve must start at p0(0) = 1")
        if np.any(np.diff(t) <= 0):
            raise InvalidParameterError("discount curve times must increase")
        if np.any(p <= 0) or np.any(p > 1) or np.any(np.diff(p) > 0):
            raise InvalidParameterError("discount factors must be in (0, 1] and nonincreasing")
        self.times = t
        self.values = p
        self._logp = np.log(p)

    @classmethod
    def flat(cls, rate, horizon=100.0):
        """``p0(t) = exp(-rate * t)``."""
        if rate < 0:
            raise InvalidParameterError("flat rate must be non-negative")
        return cls([0.0, horizon], [1.0, np.exp(-rate * horizon)])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.times.size == 1:
            return np.ones_like(t)
        lp = np.interp(t, self.times, self._logp)
        slope = (self._logp[-1] - self._logp[-2]) / (self.times[-1] - self.times[-2])
        lp = np.where(t > self.times[-1], self._logp[-1] + slope * (t - self.times[-1]), lp)
        return np.exp(lp)


@dataclass(frozen=True)
class RecoveryRate:
    R: float

    def __post_init__(self):
        if not 0.0 < self.R < 1.0:
            raise InvalidParameterError("recovery rate must lie in (0, 1)")


def _rec(R):
    return R.R if isinstance(R, RecoveryRate) else RecoveryRate(float(R)).R


def cds_leg_values(h, j, G_prev, quote: CdsQuote, discount, R):
    """Premium and protection legs of ``quote`` for a hazard ``h`` on its segment.

    Parameters
    ----------
    h : float
        Candidate hazard on ``[T_{j-1}, T_j]``.
    j : int
        Segment index (only used in messages).
    G_prev : float
        Survival probability at the segment start.

    Returns
    -------
    (float, float)
        ``(premium_leg, protection_leg)``.
    """
    t = np.asarray(quote.payment_times, dtype=float)
    delta = np.asarray(quote.accruals, dtype=float)
    G = G_prev * np.exp(-h * (t - t[0]))
    p0 = discount(t)
    premium = quote.upfront + quote.running * float(np.sum(delta * p0[:-1] * G[:-1]))
    protection = (1.0 - _rec(R)) * float(np.sum(p0[1:] * (G[:-1] - G[1:])))
    return premium, protection


def fair_running_premium(h, G_prev, quote: CdsQuote, discount, R):
    """Running premium making the legs of ``quote`` equal for hazard ``h``."""
    t = np.asarray(quote.payment_times, dtype=float)
    G = G_prev * np.exp(-h * (t - t[0]))
    annuity = float(np.sum(np.asarray(quote.accruals) * discount(t[:-1]) * G[:-1]))
    _, prot = cds_leg_values(h, quote.j, G_prev, quote, discount, R)
    return (prot - quote.upfront) / annuity


def synthetic_quotes(hazards, maturities, discount, R, payments_per_year=4, upfront=0.0):
    """Quotes with fair running premiums for the hazard curve ``hazards``.

    Segment ``j`` runs between consecutive ``maturities`` (with ``T_0 = 0``)
    and pays at a regular ``1 / payments_per_year`` spacing.
    """
    if len(hazards) != len(maturities):
        raise InvalidParameterError("need one hazard per maturity")
    quotes = []
    T_prev, G_prev = 0.0, 1.0
    for j, (h, T) in enumerate(zip(hazards, maturities), 1):
        n = int(round((T - T_prev) * payments_per_year))
        if n < 1 or abs(n - (T - T_prev) * payments_per_year) > 1e-9:
            raise InvalidParameterError(f"segment {j} is not a whole number of payment periods")
        t = T_prev + (T - T_prev) * np.arange(n + 1) / n
        stub = CdsQuote(j, float(T), upfront, 0.0, tuple(t), tuple(np.diff(t)))
        running = fair_running_premium(h, G_prev, stub, discount, R)
        quotes.append(CdsQuote(j, float(T), upfront, running, tuple(t), tuple(np.diff(t))))
        G_prev *= np.exp(-h * (T - T_prev))
        T_prev = float(T)
    return quotes


def bootstrap_hazard(quotes, discount, R, lam=1.0, h_max=None, residual_tol=1e-12):
    """Piecewise constant hazards matching each quote's legs.

    Each segment is solved by Brent's method on ``(0, h_max]`` for the
    protection-minus-premium difference, which is increasing in ``h``.

    Parameters
    ----------
    quotes : sequence of CdsQuote
        Sorted by maturity; quote ``j`` starts at the maturity of quote ``j-1``.
    discount : callable
        ``p0(t)``, e.g. a :class:`DiscountCurve`.
    R : float or RecoveryRate
    lam : float
        Killing rate the curve is meant for; sets ``h_max = 10 * lam`` by
        default and is recorded as the model's ``lambda_cap``.

    Returns
    -------
    PiecewiseHazardSurvival
        Knots at ``T_0 = 0, T_1, ..., T_{n-1}`` and ``horizon = T_n``.
    """
    R = _rec(R)
    if not quotes:
        raise InvalidParameterError("no quotes to bootstrap")
    h_max = 10.0 * lam if h_max is None else float(h_max)
    if not h_max > 0:
        raise InvalidParameterError("h_max must be positive")
    T_prev, G_prev = 0.0, 1.0
    knots = []
    for quote in quotes:
        quote.validate(T_prev)

        def diff(h, q=quote, G0=G_prev):
            prem, prot = cds_leg_values(h, q.j, G0, q, discount, R)
            return prot - prem

        hi = diff(h_max)
        if not (diff(0.0) < 0 < hi):
            raise UnbootstrappableQuoteError(
                quote.j, f"premium and protection legs do not cross for h in (0, {h_max:g}]")
        h = optimize.brentq(diff, 0.0, h_max, xtol=1e-16, rtol=4 * np.finfo(float).eps,
                            maxiter=200)
        if abs(diff(h)) >= residual_tol:
            raise UnbootstrappableQuoteError(
                quote.j, f"leg residual {abs(diff(h)):.3e} above {residual_tol:g}")
        knots.append((T_prev, h))
        G_prev *= np.exp(-h * (quote.T - T_prev))
        T_prev = float(quote.T)
    return make_piecewise_hazard(knots, lambda_cap=lam, horizon=T_prev)


def leg_residuals(model: PiecewiseHazardSurvival, quotes, discount, R):
    """``|protection - premium|`` of each quote under ``model``."""
    out = []
    for q in quotes:
        T0 = float(q.payment_times[0])
        h = float(model.hazard(T0))
        prem, prot = cds_leg_values(h, q.j, float(model.G(T0)), q, discount, R)
        out.append(abs(prot - prem))
    return np.array(out)


def stitch_barrier(hazard_model: PiecewiseHazardSurvival, density, lam, kernel, grid, dt,
                   T=None, continuous=False, **options):
    """Barrier on ``[0, T_n]`` for a piecewise constant hazard, restarting at each knot.

    Parameters
    ----------
    hazard_model : PiecewiseHazardSurvival
    density : InitialDensity
    lam : float
        Must exceed every hazard.
    kernel, grid, dt :
        As in :class:`~ifpt.barrier.IfptProblem`.
    T : float, optional
        Final horizon; defaults to ``hazard_model.horizon``.
    continuous : bool
        Start each segment at the previous barrier value instead of the
        root of the hazard identity; see
        :func:`~ifpt.barrier.solve_restarted`.
    **options
        Further :class:`~ifpt.barrier.IfptProblem` fields (``theta``,
        ``snapshot_stride``, ...).
    """
    if not isinstance(hazard_model, PiecewiseHazardSurvival):
        raise InvalidParameterError("stitching needs a piecewise constant hazard model")
    T = hazard_model.horizon if T is None else float(T)
    if T is None:
        raise InvalidParameterError("no horizon given and the hazard model records none")
    knots = [t for t in hazard_model.knots() if t < T]
    problem = IfptProblem(survival=hazard_model, density=density, lam=lam, kernel=kernel,
                          grid=grid, dt=dt, T=T, **options)
    return solve_restarted(problem, knots, continuous=continuous)
