"""Target lifetime laws and initial densities of the credit index.

A survival model is evaluated through :meth:`SurvivalModel.eval`, which returns
the triple ``(G, g, dg)`` of survival function, density ``g = G'`` (a negative
quantity) and its derivative ``dg = G''``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special

from .errors import HazardBoundError, InvalidParameterError

__all__ = [
    "SurvivalModel", "ExponentialSurvival", "PiecewiseHazardSurvival",
    "TabulatedSurvival", "HazardReport", "make_exponential",
    "make_piecewise_hazard", "make_tabulated", "check_hazard_bound",
    "survival_from_descriptor", "InitialDensity", "GaussianDensity",
    "GridDensity",
]


class SurvivalModel:
    """Base class; subclasses implement :meth:`eval` and :meth:`shifted`."""

    kind = "abstract"
    lambda_cap: float | None = None

    def eval(self, t):
        raise NotImplementedError

    def G(self, t):
        return self.eval(t)[0]

    def hazard(self, t):
        """Instantaneous default intensity ``-g/G``."""
        G, g, _ = self.eval(t)
        return -g / G

    def shifted(self, t0):
        """Conditional law ``t -> G(t0 + t) / G(t0)``."""
        raise NotImplementedError

    def knots(self):
        """Times at which ``g`` or ``g'`` may jump (empty for smooth models)."""
        return np.empty(0)

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialSurvival(SurvivalModel):
    nu: float
    lambda_cap: float | None = None
    kind = "exponential"

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        G = np.exp(-self.nu * t)
        return G, -self.nu * G, self.nu ** 2 * G

    def shifted(self, t0):
        return self

    def descriptor(self):
        return {"kind": "exponential", "nu": self.nu}


@dataclass(frozen=True)
class PiecewiseHazardSurvival(SurvivalModel):
    """Piecewise constant hazard ``h(s) = h_j`` on ``[T_j, T_{j+1})``.

    The last hazard extends to infinity.  At a knot ``g`` and ``g'`` take
    their right limits.  ``horizon`` optionally records the last maturity
    the curve was built for.
    """

    times: tuple
    rates: tuple
    lambda_cap: float | None = None
    horizon: float | None = None
    kind = "piecewise"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        T = np.asarray(self.times, dtype=float)
        h = np.asarray(self.rates, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(h[:-1] * np.diff(T))])
        object.__setattr__(self, "_cum", cum)

    def _segment(self, t):
        return np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, None)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        T = np.asarray(self.times)
        h = np.asarray(self.rates)
        j = self._segment(t)
        G = np.exp(-(self._cum[j] + h[j] * (t - T[j])))
        return G, -h[j] * G, h[j] ** 2 * G

    def shifted(self, t0):
        T = np.asarray(self.times)
        j = int(self._segment(t0))
        times = np.concatenate([[0.0], T[j + 1:] - t0])
        rates = np.asarray(self.rates)[j:]
        horizon = None if self.horizon is None else self.horizon - t0
        return PiecewiseHazardSurvival(tuple(times), tuple(rates), self.lambda_cap, horizon)

    def knots(self):
        return np.asarray(self.times[1:], dtype=float)

    def descriptor(self):
        out = {"kind": "piecewise",
               "knots": [[float(a), float(b)] for a, b in zip(self.times, self.rates)]}
        if self.horizon is not None:
            out["horizon"] = float(self.horizon)
        return out


class TabulatedSurvival(SurvivalModel):
    """``G = exp(s(t))`` with ``s`` a C2 cubic spline through ``log G``.

    Defined on ``[0, t_max]``; evaluation beyond the last breakpoint raises.
    """

    kind = "tabulated"

    def __init__(self, times, values, lambda_cap=None, _offset=0.0):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.lambda_cap = lambda_cap
        self._offset = _offset
        self._spline = interpolate.CubicSpline(self.times, np.log(self.values),
                                               bc_type="natural")
        self._s0 = float(self._spline(_offset))

    @property
    def t_max(self):
        return self.times[-1] - self._offset

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_max + 1e-12) or np.any(t < 0):
            raise InvalidParameterError(f"tabulated survival defined on [0, {self.t_max}]")
        s = self._spline(t + self._offset) - self._s0
        ds = self._spline(t + self._offset, 1)
        dds = self._spline(t + self._offset, 2)
        G = np.exp(s)
        return G, ds * G, (dds + ds ** 2) * G

    def shifted(self, t0):
        return TabulatedSurvival(self.times, self.values, self.lambda_cap,
                                 self._offset + t0)

    def descriptor(self):
        return {"kind": "tabulated", "times": self.times.tolist(),
                "values": self.values.tolist()}


def make_exponential(nu, lambda_cap=None) -> ExponentialSurvival:
    """Exponential lifetime ``G(t) = exp(-nu t)``."""
    if not np.isfinite(nu) or nu <= 0:
        raise InvalidParameterError(f"rate nu must be positive, got {nu}")
    return ExponentialSurvival(float(nu), lambda_cap)


def make_piecewise_hazard(knots, lambda_cap=None, horizon=None) -> PiecewiseHazardSurvival:
    """Piecewise constant hazard from ``[(T_0, h_0), (T_1, h_1), ...]`` with ``T_0 = 0``."""
    knots = [tuple(map(float, k)) for k in knots]
    if not knots:
        raise InvalidParameterError("at least one hazard knot is required")
    times = np.array([k[0] for k in knots])
    rates = np.array([k[1] for k in knots])
    if times[0] != 0.0:
        raise InvalidParameterError("first hazard knot must be at t=0")
    if np.any(np.diff(times) <= 0):
        raise InvalidParameterError("hazard knot times must be strictly increasing")
    if np.any(rates <= 0) or not np.all(np.isfinite(rates)):
        raise InvalidParameterError("hazard rates must be positive")
    if horizon is not None and not horizon > times[-1]:
        raise InvalidParameterError("horizon must exceed the last hazard knot")
    return PiecewiseHazardSurvival(tuple(map(float, times)), tuple(map(float, rates)), lambda_cap,
                                   None if horizon is None else float(horizon))


def make_tabulated(times, values, lambda_cap, n_check=2001) -> TabulatedSurvival:
    """Tabulated survival curve; refused unless the hazard bound holds for ``lambda_cap``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.shape != values.shape or times.size < 3:
        raise InvalidParameterError("need at least three (t, G) breakpoints")
    if times[0] != 0.0 or values[0] != 1.0:
        raise InvalidParameterError("tabulated survival must start at (0, 1)")
    if np.any(np.diff(times) <= 0) or np.any(values <= 0):
        raise InvalidParameterError("breakpoints must be increasing with positive G")
    model = TabulatedSurvival(times, values, lambda_cap)
    report = check_hazard_bound(model, lambda_cap, times[-1], n_check)
    if not report.ok:
        raise HazardBoundError(
            f"tabulated survival violates 0 < -g < lam*G (margin {report.worst_margin:.3e} "
            f"at t={report.argmin_t:.6g})", report.worst_margin, report.argmin_t)
    return model


@dataclass(frozen=True)
class HazardReport:
    ok: bool
    worst_margin: float
    argmin_t: float


def check_hazard_bound(model: SurvivalModel, lam, horizon, n_samples=1001) -> HazardReport:
    """Sample ``min(-g, lam*G + g)`` on ``[0, horizon]`` (knots included)."""
    if lam <= 0 or horizon <= 0:
        raise InvalidParameterError("lam and horizon must be positive")
    t = np.linspace(0.0, horizon, n_samples)
    kn = model.knots()
    t = np.union1d(t, kn[kn <= horizon])
    G, g, _ = model.eval(t)
    margin = np.minimum(-g, lam * G + g)
    k = int(np.argmin(margin))
    return HazardReport(bool(margin[k] > 0), float(margin[k]), float(t[k]))


def survival_from_descriptor(desc: dict, lambda_cap=None) -> SurvivalModel:
    kind = desc.get("kind")
    if kind == "exponential":
        return make_exponential(desc["nu"], lambda_cap)
    if kind == "piecewise":
        return make_piecewise_hazard(desc["knots"], lambda_cap, desc.get("horizon"))
    if kind == "tabulated":
        return make_tabulated(desc["times"], desc["values"], lambda_cap)
    raise InvalidParameterError(f"unknown survival kind {kind!r}")


# initial densities -----------------------------------------------------------


class InitialDensity:
    """Density of ``Y_0``: evaluable with two derivatives, and samplable."""

    def eval(self, x):
        """Return ``(f, f', f'')`` at ``x``."""
        raise NotImplementedError

    def sample(self, rng, n):
        raise NotImplementedError

    def ppf(self, q):
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianDensity(InitialDensity):
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if not self.std > 0:
            raise InvalidParameterError("std must be positive")

    def eval(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        f = np.exp(-0.5 * z * z) / (self.std * np.sqrt(2 * np.pi))
        return f, -z / self.std * f, (z * z - 1) / self.std ** 2 * f

    def ppf(self, q):
        return self.mean + self.std * special.ndtri(q)

    def sample(self, rng, n):
        return self.ppf(rng.random(n))


class GridDensity(InitialDensity):
    """Density known only through samples on a periodic grid.

    Used for restarts, where the new initial condition is a normalized killed
    density.  Derivatives are spectral; sampling inverts the piecewise linear
    cumulative distribution.
    """

    def __init__(self, grid, values):
        self.grid = grid
        self.values = np.asarray(values, dtype=float)
        cdf = np.concatenate([[0.0], np.cumsum(np.clip(self.values, 0, None))])
        self._cdf = cdf / cdf[-1]
        self._edges = np.concatenate([grid.x, [grid.x[-1] + grid.dx]]) - 0.5 * grid.dx

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape == self.grid.x.shape and np.array_equal(x, self.grid.x):
            v = self.values
            return v, self.grid.diff(v, 1), self.grid.diff(v, 2)
        raise InvalidParameterError("grid density can only be evaluated at its grid nodes")

    def ppf(self, q):
        return np.interp(q, self._cdf, self._edges)

    def sample(self, rng, n):
        return self.ppf(rng.random(n))

