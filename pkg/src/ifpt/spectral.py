r"""Periodic pseudo-spectral machinery and additive (IMEX) Runge--Kutta stepping.

Fields are plain real :class:`numpy.ndarray` samples at the nodes of a
:class:`SpectralGrid`.  The stepper integrates systems of the form

.. math::

    u_t = \tfrac12 u_{xx} + N_u(u, b, t), \qquad b' = N_b(u, b, t),

treating the diffusion implicitly (a diagonal solve in Fourier space) and
everything else explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Fr
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError

__all__ = ["SpectralGrid", "make_grid", "differentiate", "heat_propagate",
           "integrate", "ImexTableau", "ARK436L2SA", "imex_step"]


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid ``x_k = -L/2 + k L/N``, ``k = 0..N-1``."""

    N: int
    L: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise InvalidParameterError(f"N must be an even integer >= 8, got {self.N}")
        if not self.L > 0:
            raise InvalidParameterError("period L must be positive")

    @property
    def dx(self):
        return self.L / self.N

    @cached_property
    def x(self):
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @cached_property
    def kappa(self):
        """Non-negative wavenumbers ``2 pi n / L`` of the real FFT, ``n = 0..N/2``."""
        return 2 * np.pi * np.arange(self.N // 2 + 1) / self.L

    def fft(self, u):
        return np.fft.rfft(u)

    def ifft(self, uh):
        return np.fft.irfft(uh, self.N)

    def diff(self, u, order=1):
        """Fourier-multiplier derivative ``(i kappa)^order``."""
        if order not in (1, 2):
            raise InvalidParameterError("only first and second derivatives are supported")
        mult = (1j * self.kappa) ** order
        if order % 2:
            mult = mult.copy()
            mult[-1] = 0.0  # Nyquist mode has no odd derivative on a real grid
        return self.ifft(mult * self.fft(u))

    def heat(self, u, dt):
        """Exact solution operator of ``u_t = u_xx / 2`` over time ``dt``."""
        if dt < 0:
            raise InvalidParameterError("heat propagation time must be non-negative")
        return self.ifft(np.exp(-0.5 * self.kappa ** 2 * dt) * self.fft(u))

    def integrate(self, u):
        return self.dx * float(np.sum(u))

    def inner(self, u, v):
        return self.dx * float(np.dot(u, v))


def make_grid(N, L) -> SpectralGrid:
    return SpectralGrid(int(N), float(L))


def differentiate(grid, u, order=1):
    return grid.diff(u, order)


def heat_propagate(grid, u, dt):
    return grid.heat(u, dt)


def integrate(grid, u):
    """Rectangle rule ``dx * sum(u)``; spectrally accurate for smooth periodic ``u``."""
    return grid.integrate(u)


# IMEX tableaux ---------------------------------------------------------------


@dataclass(frozen=True)
class ImexTableau:
    """Additive Runge--Kutta pair sharing abscissae ``c``.

    ``A_exp`` is strictly lower triangular; ``A_imp`` lower triangular with
    the diagonal solved implicitly.  ``b_hat`` is the embedded solution
    weight vector (used for error reporting only).
    """

    name: str
    A_exp: np.ndarray
    A_imp: np.ndarray
    b_exp: np.ndarray
    b_imp: np.ndarray
    c: np.ndarray
    order: int
    b_hat_exp: np.ndarray | None = None
    b_hat_imp: np.ndarray | None = None

    @property
    def stages(self):
        return len(self.c)

    def validate(self, tol=1e-14):
        s = self.stages
        if np.any(np.triu(self.A_exp) != 0):
            raise InvalidParameterError("explicit matrix must be strictly lower triangular")
        if np.any(np.triu(self.A_imp, 1) != 0):
            raise InvalidParameterError("implicit matrix must be lower triangular")
        for b in (self.b_exp, self.b_imp):
            if abs(b.sum() - 1) > tol:
                raise InvalidParameterError("weights must sum to one")
        for A in (self.A_exp, self.A_imp):
            if np.abs(A.sum(1) - self.c).max() > tol:
                raise InvalidParameterError("row sums must equal the abscissae")
        if self.order < 3 or s < 2:
            raise InvalidParameterError("tableau order must be >= 3")
        return self


def _mat(rows, s):
    A = np.zeros((s, s))
    for i, row in enumerate(rows):
        A[i, :len(row)] = [float(Fr(v)) for v in row]
    return A


def _vec(vals):
    return np.array([float(Fr(v)) for v in vals])


# Kennedy & Carpenter (2003), ARK4(3)6L[2]SA: ESDIRK implicit part with
# gamma = 1/4, explicit part ERK; both share the weights b.
_ARK4_B = ["82889/524892", "0", "15625/83664", "69875/102672", "-2260/8211", "1/4"]
_ARK4_BHAT = ["4586570599/29645900160", "0", "178811875/945068544",
              "814220225/1159782912", "-3700637/11593932", "61727/225920"]
ARK436L2SA = ImexTableau(
    name="ARK4(3)6L[2]SA",
    A_exp=_mat([
        [],
        ["1/2"],
        ["13861/62500", "6889/62500"],
        ["-116923316275/2393684061468", "-2731218467317/15368042101831",
         "9408046702089/11113171139209"],
        ["-451086348788/2902428689909", "-2682348792572/7519795681897",
         "12662868775082/11960479115383", "3355817975965/11060851509271"],
        ["647845179188/3216320057751", "73281519250/8382639484533",
         "552539513391/3454668386233", "3354512671639/8306763924573", "4040/17871"],
    ], 6),
    A_imp=_mat([
        ["0"],
        ["1/4", "1/4"],
        ["8611/62500", "-1743/31250", "1/4"],
        ["5012029/34652500", "-654441/2922500", "174375/388108", "1/4"],
        ["15267082809/155376265600", "-71443401/120774400", "730878875/902184768",
         "2285395/8070912", "1/4"],
        _ARK4_B,
    ], 6),
    b_exp=_vec(_ARK4_B),
    b_imp=_vec(_ARK4_B),
    c=_vec(["0", "1/2", "83/250", "31/50", "17/20", "1"]),
    order=4,
    b_hat_exp=_vec(_ARK4_BHAT),
    b_hat_imp=_vec(_ARK4_BHAT),
)


def imex_step(u, b, t, dt, tableau, system, info=None):
    """Advance ``(u, b)`` from ``t`` to ``t + dt``.

    Parameters
    ----------
    u : ndarray
        Field samples on ``system.grid``.
    b : float
        Scalar ODE component (no stiff part).
    tableau : ImexTableau
    system : object
        Provides ``grid`` and ``nonstiff(u, b, t) -> (N_u, N_b)``.
    info : dict, optional
        If given, receives ``err_u`` (sup norm) and ``err_b`` from the
        embedded weights, when the tableau has them.

    Returns
    -------
    (ndarray, float)
    """
    if not dt > 0:
        raise InvalidParameterError("time step must be positive")
    grid = system.grid
    s = tableau.stages
    AE, AI, c = tableau.A_exp, tableau.A_imp, tableau.c
    lap = -0.5 * grid.kappa ** 2  # symbol of the stiff operator u_xx / 2
    uh0 = grid.fft(u)
    Nuh = [None] * s
    Luh = [None] * s
    Nb = np.zeros(s)
    for i in range(s):
        rhs = uh0.copy()
        bi = b
        for j in range(i):
            if AE[i, j]:
                rhs += dt * AE[i, j] * Nuh[j]
                bi += dt * AE[i, j] * Nb[j]
            if AI[i, j]:
                rhs += dt * AI[i, j] * Luh[j]
        Uh = rhs / (1.0 - dt * AI[i, i] * lap)
        Ui = u if i == 0 and AI[0, 0] == 0 else grid.ifft(Uh)
        Luh[i] = lap * Uh
        nu, Nb[i] = system.nonstiff(Ui, bi, t + c[i] * dt)
        Nuh[i] = grid.fft(nu)
    uh = uh0.copy()
    b_new = b
    for i in range(s):
        uh += dt * (tableau.b_exp[i] * Nuh[i] + tableau.b_imp[i] * Luh[i])
        b_new += dt * tableau.b_exp[i] * Nb[i]
    if info is not None and tableau.b_hat_exp is not None:
        eh = np.zeros_like(uh)
        eb = 0.0
        for i in range(s):
            eh += dt * ((tableau.b_exp[i] - tableau.b_hat_exp[i]) * Nuh[i]
                        + (tableau.b_imp[i] - tableau.b_hat_imp[i]) * Luh[i])
            eb += dt * (tableau.b_exp[i] - tableau.b_hat_exp[i]) * Nb[i]
        info["err_u"] = float(np.abs(grid.ifft(eh)).max())
        info["err_b"] = abs(float(eb))
    return grid.ifft(uh), float(b_new)
