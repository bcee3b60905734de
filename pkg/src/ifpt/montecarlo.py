r"""Monte Carlo oracle for the killed (Cox) default construction.

Paths ``Y_t = Y_0 + B_t`` are simulated with Gaussian increments on the
periodic domain of the barrier solver, and the killing integral

.. math::

    \Lambda_t = \lambda \int_0^t \psi(Y_s - b(s))\, ds

is accumulated with the left-point rule.  Survival is estimated by the
mean of ``exp(-Lambda_t)`` (no threshold is sampled); default times use an
independent unit exponential threshold on the same paths.

Random numbers come from a :class:`numpy.random.SeedSequence` tree: one
child per chunk of paths, each split into independent streams for the
path increments, the orthogonal asset noise and the thresholds.  Results
are therefore reproducible for a fixed seed whatever the thread count,
and estimators sharing a seed see common random numbers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

__all__ = ["McConfig", "SurvivalEstimate", "DefaultTimes", "survival_mc",
           "sample_default_times", "empirical_survival", "KernelTable"]


@dataclass(frozen=True)
class McConfig:
    """Simulation settings.

    ``chunk`` paths share one random stream; it fixes the stream layout and
    so must stay constant for results to be comparable.  ``threads`` only
    changes wall time.
    """

    paths: int = 100_000
    dt_sim: float = 1.0 / 256
    seed: int = 0
    antithetic: bool = False
    chunk: int = 8192
    threads: int = 1

    def validate(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise InvalidParameterError("paths must be a positive integer")
        if not self.dt_sim > 0:
            raise InvalidParameterError("dt_sim must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        if self.chunk < 2 or self.chunk % 2:
            raise InvalidParameterError("chunk must be an even integer >= 2")
        if self.antithetic and self.paths % 2:
            raise InvalidParameterError("antithetic sampling needs an even number of paths")
        if self.threads < 1:
            raise InvalidParameterError("threads must be >= 1")
        return self

    def chunks(self):
        """Sizes of the successive path chunks."""
        full, rest = divmod(int(self.paths), self.chunk)
        return [self.chunk] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class SurvivalEstimate:
    times: np.ndarray
    S_hat: np.ndarray
    se: np.ndarray

    def at(self, t):
        """Estimate and standard error at the simulation time nearest ``t``."""
        k = int(np.argmin(np.abs(self.times - t)))
        return float(self.S_hat[k]), float(self.se[k])

    def table(self):
        return {"t": self.times, "S_hat": self.S_hat, "se": self.se}


@dataclass(frozen=True)
class DefaultTimes:
    """Simulated default times; censored paths carry ``tau = T``."""

    tau: np.ndarray
    censored: np.ndarray
    horizon: float

    def table(self):
        return {"tau": self.tau, "censored": self.censored.astype(int)}


class KernelTable:
    """Periodic lookup table of a kernel with linear interpolation.

    Much cheaper than direct evaluation when millions of points are needed;
    the interpolation error is ``O((L/n)^2 max|psi''|)``.
    """

    def __init__(self, kernel, n=2 ** 16):
        self.period = float(kernel.period)
        x, vals = kernel.tabulate(n)
        self.x0 = float(x[0])
        self.h = self.period / n
        self.n = n
        self.vals = np.append(vals, vals[0])

    def __call__(self, x):
        s = (np.asarray(x) - self.x0) / self.h
        fl = np.floor(s)
        w = s - fl
        i = fl.astype(np.int64) % self.n
        return self.vals[i] + w * (self.vals[i + 1] - self.vals[i])


def _time_mesh(barrier, T, dt_sim):
    if not T > 0:
        raise InvalidParameterError("horizon T must be positive")
    if barrier.times[0] > 1e-12 or barrier.times[-1] < T - 1e-9:
        raise InvalidParameterError(
            f"barrier covers [{barrier.times[0]}, {barrier.times[-1]}], shorter than [0, {T}]")
    n = int(round(T / dt_sim))
    if n < 1 or abs(n * dt_sim - T) > 1e-9 * T:
        raise InvalidParameterError("T must be an integer multiple of dt_sim")
    times = T * np.arange(n + 1) / n
    return times, barrier.barrier_at(times[:-1])


def _streams(cfg):
    root = np.random.SeedSequence(int(cfg.seed))
    return [tuple(np.random.default_rng(s) for s in child.spawn(3))
            for child in root.spawn(len(cfg.chunks()))]


def _normals(rng, n, antithetic):
    if antithetic:
        z = rng.standard_normal(n // 2)
        return np.concatenate([z, -z])
    return rng.standard_normal(n)


def _initial(density, rng, n, antithetic):
    if antithetic:
        q = rng.random(n // 2)
        return density.ppf(np.concatenate([q, 1.0 - q]))
    return density.sample(rng, n)


def _moments(parts):
    n = sum(p[0] for p in parts)
    s = sum(p[1] for p in parts)
    s2 = sum(p[2] for p in parts)
    mean = s / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    se = np.sqrt(var / max(n - 1, 1)) if n > 1 else np.zeros_like(mean)
    return mean, se


def _map_chunks(fn, cfg):
    streams = _streams(cfg)
    jobs = list(zip(cfg.chunks(), streams))
    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(lambda a: fn(*a), jobs))
    return [fn(*a) for a in jobs]


def simulate_killing(n, rngs, bvals, dt, density, lam, table, antithetic, observe=None):
    """Simulate one chunk of paths; return ``(Y_0, Y_T, Lambda_T)``.

    ``observe(k, Lambda)`` is called with the killing integral at every
    mesh time ``t_k``, ``k = 0..steps``.
    """
    ry = rngs[0]
    y = _initial(density, ry, n, antithetic)
    y0 = y.copy()
    acc = np.zeros(n)
    if observe is not None:
        observe(0, acc)
    sq = np.sqrt(dt)
    for k, bk in enumerate(bvals, 1):
        if lam:
            acc += (lam * dt) * table(y - bk)
        y += sq * _normals(ry, n, antithetic)
        if observe is not None:
            observe(k, acc)
    return y0, y, acc


def _pair_mean(v, antithetic):
    if antithetic:
        h = v.shape[0] // 2
        return 0.5 * (v[:h] + v[h:])
    return v


def survival_mc(barrier, density, lam, kernel, T, cfg: McConfig,
                table_size=2 ** 16) -> SurvivalEstimate:
    """Survival curve ``E[exp(-Lambda_t)]`` on the simulation mesh ``0, dt_sim, ..., T``.

    Parameters
    ----------
    barrier : BarrierSolution
        Barrier on (at least) ``[0, T]``; linearly interpolated.
    density : InitialDensity
        Law of ``Y_0``.
    lam : float
        Killing rate; ``0`` gives ``S = 1`` exactly.
    kernel : KillingKernel
        Evaluated periodically at ``Y - b``, consistent with the solver domain.
    T : float
    cfg : McConfig

    Returns
    -------
    SurvivalEstimate
    """
    cfg.validate()
    if lam < 0:
        raise InvalidParameterError("lam must be non-negative")
    times, bvals = _time_mesh(barrier, T, cfg.dt_sim)
    table = KernelTable(kernel, table_size)

    def run(n, rngs):
        s = np.zeros(times.size)
        s2 = np.zeros(times.size)

        def observe(k, acc):
            v = _pair_mean(np.exp(-acc), cfg.antithetic)
            s[k] = v.sum()
            s2[k] = np.dot(v, v)

        simulate_killing(n, rngs, bvals, cfg.dt_sim, density, lam, table,
                         cfg.antithetic, observe)
        return (n // 2 if cfg.antithetic else n), s, s2

    mean, se = _moments(_map_chunks(run, cfg))
    return SurvivalEstimate(times, mean, se)


def sample_default_times(barrier, density, lam, kernel, T, cfg: McConfig,
                         table_size=2 ** 16, with_weights=False):
    """Default times ``inf{t_k : Lambda_{t_k} > U}`` with ``U ~ Exp(1)``.

    Uses the same path streams as :func:`survival_mc`, so the two estimators
    are evaluated on common random numbers.  With ``with_weights`` the
    terminal ``exp(-Lambda_T)`` of each path is returned as well.
    """
    cfg.validate()
    if lam < 0:
        raise InvalidParameterError("lam must be non-negative")
    times, bvals = _time_mesh(barrier, T, cfg.dt_sim)
    table = KernelTable(kernel, table_size)

    def run(n, rngs):
        U = rngs[2].standard_exponential(n)
        tau = np.full(n, float(T))
        alive = np.ones(n, dtype=bool)

        def observe(k, acc):
            hit = alive & (acc > U)
            tau[hit] = times[k]
            alive[hit] = False

        _, _, acc = simulate_killing(n, rngs, bvals, cfg.dt_sim, density, lam, table,
                                     cfg.antithetic, observe)
        return tau, alive, np.exp(-acc)

    parts = _map_chunks(run, cfg)
    out = DefaultTimes(np.concatenate([p[0] for p in parts]),
                       np.concatenate([p[1] for p in parts]), float(T))
    if with_weights:
        return out, np.concatenate([p[2] for p in parts])
    return out


def empirical_survival(sample: DefaultTimes, times):
    """Fraction of paths with ``tau > t`` (censored paths survive to the horizon)."""
    times = np.asarray(times, dtype=float)
    tau = np.where(sample.censored, np.inf, sample.tau)
    tau = np.sort(tau)
    n = tau.size
    return 1.0 - np.searchsorted(tau, times, side="right") / n
