r"""Smoothed inverse first-passage-time solver.

The killed density ``u`` and the barrier ``b`` solve

.. math::

    u_t = \tfrac12 u_{xx} - \lambda \psi(x - b) u, \qquad
    b' = \frac{g' + \theta (g + \lambda\langle\psi_b, u\rangle)
               - \lambda^2 \langle\psi_b^2, u\rangle
               + \tfrac{\lambda}{2} \langle\psi_{xx,b}, u\rangle}
              {\lambda \langle\psi_{x,b}, u\rangle},

with ``b(0)`` chosen so that ``lam * <psi(. - b(0)), f> = -g(0)``.  The
``theta`` term vanishes on exact solutions; with ``theta > 0`` the hazard
defect ``g + lam <psi_b, u>`` decays like ``exp(-theta t)`` instead of
drifting.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (BarrierDegeneracyError, HazardBoundError, IfptError,
                     IncompatibleGridError, InvalidParameterError, MassLeakError,
                     NoRootError, SegmentError)
from .kernel import KillingKernel, build_mollifier_pair
from .spectral import ARK436L2SA, ImexTableau, SpectralGrid, imex_step
from .survival import (GridDensity, InitialDensity, PiecewiseHazardSurvival, SurvivalModel,
                       check_hazard_bound)

log = logging.getLogger(__name__)

__all__ = ["IfptProblem", "Diagnostics", "BarrierSolution", "initial_barrier",
           "barrier_rhs", "solve_barrier", "solve_restarted", "bracket_barriers", "BarrierSystem",
           "boundary_mass"]

DIAGNOSTIC_FIELDS = ("t", "b", "bprime", "G_ref", "G_num", "relerr_G", "h_ref",
                     "h_num", "relerr_h", "ibp_resid", "boundary_mass")


@dataclass(frozen=True)
class IfptProblem:
    """Inputs of one barrier solve.

    ``leak_tol`` bounds the mass held in the outer bands of the periodic
    domain (see :func:`boundary_mass`); ``None`` only records it.

    ``startup_substeps`` grades the first mesh intervals: interval ``k``
    is integrated with ``ceil(startup_substeps / (k + 1))`` equal substeps.
    Narrow initial densities make ``b'`` vary on the time scale of their
    variance, far below a typical ``dt``.  ``1`` gives the plain fixed-step
    scheme, whose observed order is that of the tableau; the graded default
    is far more accurate at coarse ``dt`` but mixes error terms of several
    orders, so refinement studies should use the fixed-step scheme.
    """

    survival: SurvivalModel
    density: InitialDensity
    lam: float
    kernel: KillingKernel
    grid: SpectralGrid
    dt: float
    T: float
    theta: float = 1.0
    snapshot_stride: int = 64
    tableau: ImexTableau = ARK436L2SA
    denom_floor: float = 1e-10
    leak_tol: float | None = 1e-2
    startup_substeps: int = 32
    u0: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def initial_field(self):
        if self.u0 is not None:
            return np.asarray(self.u0, dtype=float)
        return self.density.eval(self.grid.x)[0]

    def validate(self):
        if not self.lam > 0:
            raise InvalidParameterError("killing rate lam must be positive")
        if not (self.dt > 0 and self.T > 0):
            raise InvalidParameterError("dt and T must be positive")
        if int(self.startup_substeps) != self.startup_substeps or self.startup_substeps < 1:
            raise InvalidParameterError("startup_substeps must be a positive integer")
        if abs(self.n_steps * self.dt - self.T) > 1e-9 * self.T:
            raise InvalidParameterError("horizon T must be an integer multiple of dt")
        if not np.isclose(self.kernel.period, self.grid.L, rtol=1e-13, atol=0):
            raise IncompatibleGridError("kernel period differs from grid period")
        report = check_hazard_bound(self.survival, self.lam, self.T)
        if not report.ok:
            raise HazardBoundError(
                f"hazard bound 0 < -g(t) < lam*G(t) fails on [0, {self.T}] "
                f"(worst margin {report.worst_margin:.3e} at t={report.argmin_t:.6g})",
                report.worst_margin, report.argmin_t)
        u0 = self.initial_field()
        # narrow densities underflow to exactly 0 far out; that is tolerated
        if u0.shape != (self.grid.N,) or np.any(u0 < 0) or not np.all(np.isfinite(u0)):
            raise InvalidParameterError("initial density must be finite and non-negative on the grid")
        mass = self.grid.integrate(u0)
        if abs(mass - 1.0) > 1e-8:
            raise InvalidParameterError(f"initial density has mass {mass:.12g}, expected 1")
        self.tableau.validate()
        return self


@dataclass
class Diagnostics:
    """Per-step diagnostic series (one entry per mesh time)."""

    G_ref: np.ndarray
    G_num: np.ndarray
    relerr_G: np.ndarray
    h_ref: np.ndarray
    h_num: np.ndarray
    relerr_h: np.ndarray
    ibp_resid: np.ndarray
    boundary_mass: np.ndarray
    #: ``|lam <psi_b, u> + g| / |g|``, the hazard identity itself
    identity_err: np.ndarray
    err_est_b: np.ndarray


@dataclass
class BarrierSolution:
    times: np.ndarray
    b: np.ndarray
    bprime: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    diagnostics: Diagnostics
    grid: SpectralGrid
    #: indices into ``times`` where a stitched run restarted
    restarts: tuple = ()

    def barrier_at(self, t):
        """Right-continuous linear interpolation of the barrier.

        Stitched runs repeat a restart time with the left and right barrier
        values; the right value is returned there.
        """
        t = np.asarray(t, dtype=float)
        times, b = self.times, self.b
        i = np.clip(np.searchsorted(times, t, side="right"), 1, times.size - 1)
        t0, t1 = times[i - 1], times[i]
        w = np.where(t1 > t0, (t - t0) / np.where(t1 > t0, t1 - t0, 1.0), 1.0)
        return b[i - 1] + np.clip(w, 0.0, 1.0) * (b[i] - b[i - 1])

    @property
    def horizon(self):
        return float(self.times[-1])

    def table(self):
        """Diagnostic table as a dict of equally long arrays, CSV column order."""
        d = self.diagnostics
        return {"t": self.times, "b": self.b, "bprime": self.bprime,
                "G_ref": d.G_ref, "G_num": d.G_num, "relerr_G": d.relerr_G,
                "h_ref": d.h_ref, "h_num": d.h_num, "relerr_h": d.relerr_h,
                "ibp_resid": d.ibp_resid, "boundary_mass": d.boundary_mass}


def _shifted_mass(grid, kernel, u, z):
    return grid.inner(kernel.on_grid(grid, z, derivs=(0,))[0], u)


def initial_barrier(grid, u, kernel, lam, target, tol=1e-12):
    """Unique ``z`` with ``lam * <psi(. - z), u> = target``, by bisection.

    Since ``psi`` is non-increasing, ``z -> lam <psi(. - z), u>`` is strictly
    increasing, from 0 (``z -> -inf``) to ``lam * int u`` (``z -> +inf``).
    On the periodic domain the search is confined to ``|z| < L/4`` so that
    the down-step stays away from the wrap point.
    """
    u = np.asarray(u, dtype=float)
    total = lam * grid.integrate(u)
    if not (0 < target < total):
        raise NoRootError(f"target {target:.6g} outside (0, lam*int u = {total:.6g})")

    def F(z):
        return lam * _shifted_mass(grid, kernel, u, z) - target

    lo, hi = -0.25 * grid.L, 0.25 * grid.L
    if not (F(lo) < 0 < F(hi)):
        raise NoRootError(f"target {target:.6g} not bracketed on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if F(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _inner_products(grid, kernel, u, b):
    psi, dpsi, ddpsi = kernel.on_grid(grid, b)
    dx = grid.dx
    return (psi, dx * np.dot(psi, u), dx * np.dot(psi * psi, u),
            dx * np.dot(dpsi, u), dx * np.dot(ddpsi, u), dpsi, ddpsi)


def _bprime(problem, t, g, dg, ip, l1):
    _, m_psi, m_psi2, m_dpsi, m_ddpsi = ip[:5]
    lam = problem.lam
    den = lam * m_dpsi
    floor = problem.denom_floor * max(1.0, lam * l1)
    if not abs(den) >= floor:
        raise BarrierDegeneracyError(t, float(den), floor)
    num = (dg + problem.theta * (g + lam * m_psi) - lam ** 2 * m_psi2
           + 0.5 * lam * m_ddpsi)
    return num / den


def barrier_rhs(u, b, t, problem: IfptProblem, survival=None):
    """Right-hand side ``b'(t)`` of the barrier ODE at state ``(u, b)``."""
    surv = survival or problem.survival
    _, g, dg = surv.eval(t)
    ip = _inner_products(problem.grid, problem.kernel, u, b)
    return float(_bprime(problem, t, float(g), float(dg), ip, problem.grid.dx * np.abs(u).sum()))


class BarrierSystem:
    """Nonstiff part of the coupled system, in the form :func:`imex_step` expects."""

    def __init__(self, problem: IfptProblem):
        self.problem = problem
        self.grid = problem.grid

    def nonstiff(self, u, b, t):
        p = self.problem
        ip = _inner_products(self.grid, p.kernel, u, b)
        _, g, dg = p.survival.eval(t)
        db = _bprime(p, t, float(g), float(dg), ip, self.grid.dx * np.abs(u).sum())
        return -p.lam * ip[0] * u, db


def boundary_mass(grid, u, band=1.0 / 32):
    """Mass of ``u`` within ``band * L`` of either end of the periodic domain."""
    edge = np.abs(grid.x) >= 0.5 * grid.L * (1 - 2 * band)
    return grid.dx * float(np.abs(u[edge]).sum())


def solve_barrier(problem: IfptProblem, b0=None, mass_scale=1.0, t0=0.0,
                  G_full=None) -> BarrierSolution:
    """Integrate the coupled PDE/ODE system on ``[0, T]``.

    Parameters
    ----------
    problem : IfptProblem
    b0 : float, optional
        Initial barrier.  By default it is found from the hazard identity
        at ``t = 0``.
    mass_scale, t0, G_full :
        Bookkeeping for restarted runs: times are reported on the absolute
        axis ``t0 + t``, stored densities and masses are multiplied by
        ``mass_scale`` and compared with the full survival law ``G_full``.
    """
    problem.validate()
    grid, kernel, lam = problem.grid, problem.kernel, problem.lam
    surv = problem.survival
    u = problem.initial_field().copy()
    n = problem.n_steps
    dt = problem.T / n
    if b0 is None:
        b0 = initial_barrier(grid, u, kernel, lam, -float(surv.eval(0.0)[1]))
    b = float(b0)
    system = BarrierSystem(problem)

    times = t0 + dt * np.arange(n + 1)
    bs = np.empty(n + 1)
    bps = np.empty(n + 1)
    cols = {k: np.empty(n + 1) for k in ("G_ref", "G_num", "h_ref", "h_num", "ibp",
                                         "bmass", "ident", "err_b")}
    snaps_t, snaps = [], []
    stride = max(1, int(problem.snapshot_stride))

    def record(k, u, b, err_b):
        tk = k * dt
        G, g, dg = (float(v) for v in surv.eval(tk))
        ip = _inner_products(grid, kernel, u, b)
        mass = grid.integrate(u)
        bs[k] = b
        bps[k] = _bprime(problem, tk, g, dg, ip, grid.dx * np.abs(u).sum())
        ux = grid.diff(u, 1)
        m_dpsi_ux = grid.inner(ip[5], ux)
        cols["ibp"][k] = abs(ip[4] + m_dpsi_ux) / max(1.0, abs(m_dpsi_ux))
        cols["G_ref"][k] = G
        cols["G_num"][k] = mass
        cols["h_ref"][k] = -g / G
        cols["h_num"][k] = lam * ip[1] / mass
        cols["ident"][k] = abs(lam * ip[1] + g) / abs(g)
        cols["bmass"][k] = boundary_mass(grid, u)
        cols["err_b"][k] = err_b
        if problem.leak_tol is not None and cols["bmass"][k] > problem.leak_tol:
            raise MassLeakError(t0 + tk, cols["bmass"][k], problem.leak_tol)
        if k % stride == 0 or k == n:
            snaps_t.append(t0 + tk)
            snaps.append(mass_scale * u)

    record(0, u, b, 0.0)
    info = {}
    S = int(problem.startup_substeps)
    for k in range(n):
        m = -(-S // (k + 1))
        h = dt / m
        err_b = 0.0
        try:
            for j in range(m):
                u, b = imex_step(u, b, k * dt + j * h, h, problem.tableau, system, info)
                err_b += info.get("err_b", 0.0)
        except BarrierDegeneracyError as exc:
            raise BarrierDegeneracyError(t0 + exc.t, exc.value, exc.floor) from None
        if not (np.isfinite(b) and np.all(np.isfinite(u))):
            raise BarrierDegeneracyError(t0 + (k + 1) * dt, float("nan"), problem.denom_floor)
        record(k + 1, u, b, err_b)

    G_num = mass_scale * cols["G_num"]
    # the segment's own hazard is the left limit of the full one at its end
    h_ref = cols["h_ref"]
    G_ref = G_full.eval(times)[0] if G_full is not None else mass_scale * cols["G_ref"]
    diag = Diagnostics(
        G_ref=G_ref, G_num=G_num, relerr_G=np.abs(G_num - G_ref) / G_ref,
        h_ref=h_ref, h_num=cols["h_num"],
        relerr_h=np.abs(cols["h_num"] - h_ref) / h_ref,
        ibp_resid=cols["ibp"], boundary_mass=mass_scale * cols["bmass"],
        identity_err=cols["ident"], err_est_b=cols["err_b"])
    return BarrierSolution(times=times, b=bs, bprime=bps, snapshot_times=np.array(snaps_t),
                           snapshots=np.array(snaps), diagnostics=diag, grid=grid)


def _segment_law(survival, a, c):
    """Conditional law ``G(a + t) / G(a)`` for ``t`` in ``[0, c - a]``.

    Piecewise hazards drop a knot sitting exactly at the segment end, so
    that the segment sees the left limit of the hazard there.
    """
    if isinstance(survival, PiecewiseHazardSurvival):
        T = np.asarray(survival.times)
        h = np.asarray(survival.rates)
        j = int(survival._segment(a))
        inner = (T > a) & (T < c)
        times = np.concatenate([[0.0], T[inner] - a])
        rates = np.concatenate([[h[j]], h[inner]])
        return PiecewiseHazardSurvival(tuple(times), tuple(rates), survival.lambda_cap)
    return survival.shifted(a)


def _concatenate(sols):
    if len(sols) == 1:
        return sols[0]
    cat = np.concatenate
    fields = Diagnostics.__dataclass_fields__
    diag = Diagnostics(**{k: cat([getattr(s.diagnostics, k) for s in sols]) for k in fields})
    starts = np.cumsum([0] + [s.times.size for s in sols[:-1]])
    return BarrierSolution(
        times=cat([s.times for s in sols]), b=cat([s.b for s in sols]),
        bprime=cat([s.bprime for s in sols]),
        snapshot_times=cat([s.snapshot_times for s in sols]),
        snapshots=cat([s.snapshots for s in sols]), diagnostics=diag, grid=sols[0].grid,
        restarts=tuple(int(i) for i in starts[1:]))


def solve_restarted(problem: IfptProblem, restart_times, continuous=False) -> BarrierSolution:
    """Solve on ``[0, T]`` in segments, restarting at each of ``restart_times``.

    At a restart time ``T_j`` the killed density is divided by its mass and
    becomes the next initial density, and the target becomes the
    conditional law ``G(T_j + t) / G(T_j)``.  The new barrier starts at the
    root of the hazard identity for that density (or at ``b(T_j-)`` when
    ``continuous`` is set).  Restart times appear twice in the result,
    carrying the left and right states; ``restarts`` holds the indices of
    the right copies.

    Where the hazard jumps at a restart the hazard identity forces a jump of
    the barrier.  A continuous restart leaves a hazard defect that the
    stabiliser only damps at rate ``theta``, and the integrated defect shows
    up as a conservation error of order ``jump / theta``.

    Solver errors are re-raised as :class:`~ifpt.errors.SegmentError`
    naming the segment.
    """
    problem.validate()
    grid, dt = problem.grid, problem.T / problem.n_steps
    edges = [0.0, *sorted(float(r) for r in restart_times), float(problem.T)]
    for j, (a, c) in enumerate(zip(edges[:-1], edges[1:])):
        n = (c - a) / dt
        if not c > a or abs(n - round(n)) > 1e-9 * max(n, 1.0):
            raise InvalidParameterError(
                f"segment {j} [{a}, {c}] is empty or not a multiple of dt")
    full = problem.survival
    sols = []
    scale, b_end, u_next = 1.0, None, None
    for j, (a, c) in enumerate(zip(edges[:-1], edges[1:])):
        kw = {"survival": _segment_law(full, a, c), "T": c - a}
        if j:
            kw.update(u0=u_next, density=GridDensity(grid, u_next))
        seg = replace(problem, **kw)
        try:
            sol = solve_barrier(seg, b0=b_end if (continuous and j) else None,
                                mass_scale=scale, t0=a, G_full=full)
        except IfptError as exc:
            raise SegmentError(j, exc) from exc
        # FFT round-off can leave ~1e-20 negative samples in the far field
        u_end = np.clip(sol.snapshots[-1] / scale, 0.0, None)
        mass = grid.integrate(u_end)
        u_next = u_end / mass
        scale *= mass
        b_end = float(sol.b[-1])
        sols.append(sol)
    return _concatenate(sols)


def bracket_barriers(problem: IfptProblem, eps_list, tol=1e-3):
    """Barriers for the mollifier pairs of each width in ``eps_list``.

    Returns a list of ``(eps, over_solution, under_solution)``.  The kernel
    of ``problem`` is replaced by the pair members; the survival law must
    satisfy the strict hazard bound with ``lam = 1``.
    """
    if problem.lam != 1.0:
        raise InvalidParameterError("hard-barrier bracketing uses the normalisation lam = 1")
    out = []
    for eps in eps_list:
        pair = build_mollifier_pair(eps, problem.grid.L)
        over = solve_barrier(replace(problem, kernel=pair.over))
        under = solve_barrier(replace(problem, kernel=pair.under))
        gap = float(np.max(over.b - under.b))
        if gap > tol:
            log.warning("bracket ordering violated at eps=%g: max(over - under) = %.3e", eps, gap)
        out.append((float(eps), over, under))
    return out
