"""Killing profiles psi: smooth, [0, 1]-valued, non-increasing steps.

Every kernel lives on a periodic domain of length ``period``: on
``[-L/2, L/2)`` it drops from 1 to 0 around ``x = 0`` and rises back to 1
around the wrap point ``x = +-L/2``, mirroring the periodic extension of the
indicator of ``{x < 0}``.  All derivatives are analytic, and evaluation at
shifted nodes ``x_k - b`` is exact for any real ``b``.

Two constructions are provided:

* :func:`build_fejer` -- Cesaro (Fejer) mean of the Fourier series of the
  indicator, a trigonometric polynomial.
* :func:`build_mollifier_pair` -- a pair of compactly supported smooth steps
  bracketing the indicator from below and above.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import IncompatibleGridError, InvalidParameterError

__all__ = ["KillingKernel", "FejerKernel", "MollifierKernel", "MollifierPair",
           "build_fejer", "build_mollifier_pair", "eval_shifted", "bump",
           "kernel_from_descriptor"]


class KillingKernel:
    """Common interface of the killing profiles.

    Subclasses provide :meth:`eval` (value or derivative at arbitrary points)
    and may override :meth:`on_grid` with a faster exact route.
    """

    period: float

    def eval(self, x, deriv=0):
        raise NotImplementedError

    def on_grid(self, grid, b=0.0, derivs=(0, 1, 2)):
        """Exact samples of ``d^k psi(x_k - b)`` at the grid nodes, one array per ``k``."""
        self._check_grid(grid)
        y = grid.x - b
        return tuple(self.eval(y, d) for d in derivs)

    def _check_grid(self, grid):
        if not np.isclose(grid.L, self.period, rtol=1e-13, atol=0):
            raise IncompatibleGridError(
                f"kernel period {self.period} does not match grid period {grid.L}")

    def tabulate(self, n=2 ** 16):
        """Nodes and values on ``[-L/2, L/2)`` for periodic linear interpolation."""
        x = -0.5 * self.period + self.period * np.arange(n) / n
        return x, self.eval(x)

    # diagnostics -------------------------------------------------------------

    def _fine(self, n=None):
        n = n or 2 ** 14
        return -0.5 * self.period + self.period * np.arange(n) / n

    @cached_property
    def norms(self):
        """Sup norms of psi_x, psi_xx, psi_xxx (B, C, F) and the integrals
        D = int |psi_x| and E = int |psi^2 - psi| over the central half period
        ``[-L/4, L/4]`` holding the down-step."""
        x = self._fine()
        dx = x[1] - x[0]
        centre = np.abs(x) <= 0.25 * self.period
        psi = self.eval(x)
        d1 = self.eval(x, 1)
        phi = psi * psi - psi
        return {
            "B": float(np.abs(d1).max()),
            "C": float(np.abs(self.eval(x, 2)).max()),
            "F": float(np.abs(self.eval(x, 3)).max()),
            "D": float(np.abs(d1[centre]).sum() * dx),
            "E": float(np.abs(phi[centre]).sum() * dx),
            "phi_sup": float(np.abs(phi).max()),
            "phi_x_sup": float(np.abs(d1 * (2 * psi - 1)).max()),
        }

    def half_width(self, tol=1e-2):
        """Smallest ``h`` with ``|psi - 1| <= tol`` on ``[-L/4, -h]`` and
        ``|psi| <= tol`` on ``[h, L/4]``; ``L/4`` if never attained."""
        x = self._fine()
        psi = self.eval(x)
        centre = np.abs(x) <= 0.25 * self.period
        dev = np.where(x < 0, np.abs(psi - 1), np.abs(psi))
        bad = centre & (dev > tol)
        if not bad.any():
            return 0.0
        return float(min(np.abs(x[bad]).max(), 0.25 * self.period))

    @cached_property
    def h(self):
        return self.half_width()

    @cached_property
    def tau_clip(self):
        """Largest violation of ``0 <= psi <= 1`` over the period, or of
        ``psi_x <= 0`` between the two transitions."""
        x = self._fine()
        psi = self.eval(x)
        band = max(psi.max() - 1.0, -psi.min(), 0.0)
        h = self.h
        mono = (x >= -0.5 * self.period + h) & (x <= 0.5 * self.period - h)
        rise = max(self.eval(x[mono], 1).max(), 0.0) if mono.any() else 0.0
        return float(max(band, rise))


class FejerKernel(KillingKernel):
    """Fejer mean of order ``m`` of the Fourier series of ``1{x < 0}``.

    ``psi(x) = 1/2 - (2/pi) sum_{n odd <= m} (1 - n/(m+1)) sin(n w x) / n``,
    ``w = 2 pi / L``.  The representation is kept as the complex exponential
    coefficients ``a_n`` (``n = 0..m``) of ``psi = sum_n a_n exp(i n w x)``.
    """

    def __init__(self, order, period):
        if int(order) != order or order < 1:
            raise InvalidParameterError("Fejer order must be a positive integer")
        if not period > 0:
            raise InvalidParameterError("period must be positive")
        self.order = int(order)
        self.period = float(period)
        n = np.arange(self.order + 1)
        a = np.zeros(self.order + 1, dtype=complex)
        a[0] = 0.5
        odd = n % 2 == 1
        weight = 1.0 - n / (self.order + 1.0)
        # -(2/pi) sin(n w x)/n  ==  a_n e^{inwx} + conj,  a_n = i/(pi n)
        a[odd] = 1j * weight[odd] / (np.pi * n[odd])
        self.coef = a
        self.omega = 2 * np.pi / self.period

    def __repr__(self):
        return f"FejerKernel(order={self.order}, period={self.period})"

    def descriptor(self):
        return {"type": "fejer", "order": self.order, "period": self.period}

    def eval(self, x, deriv=0):
        x = np.asarray(x, dtype=float)
        n = np.arange(1, self.order + 1)
        c = self.coef[1:] * (1j * n * self.omega) ** deriv
        out = np.empty(x.shape)
        flat = x.reshape(-1)
        res = out.reshape(-1)
        block = max(1, 2 ** 20 // max(1, self.order))
        for s in range(0, flat.size, block):
            ph = np.exp(1j * self.omega * np.outer(flat[s:s + block], n))
            res[s:s + block] = 2.0 * (ph @ c).real
        if deriv == 0:
            out += self.coef[0].real
        return out

    def on_grid(self, grid, b=0.0, derivs=(0, 1, 2)):
        self._check_grid(grid)
        if self.order >= grid.N // 2:
            raise IncompatibleGridError(
                f"Fejer order {self.order} not resolved by N={grid.N} (need order < N/2)")
        n = np.arange(self.order + 1)
        # grid starts at -L/2: the phase exp(-i n pi) = (-1)^n, then shift by b
        base = grid.N * self.coef * (-1.0) ** n * np.exp(-1j * n * self.omega * b)
        out = []
        spec = np.zeros(grid.N // 2 + 1, dtype=complex)
        for d in derivs:
            spec[:self.order + 1] = base * (1j * n * self.omega) ** d
            out.append(np.fft.irfft(spec, grid.N))
        return tuple(out)

    def tabulate(self, n=2 ** 16):
        x = -0.5 * self.period + self.period * np.arange(n) / n
        spec = np.zeros(n // 2 + 1, dtype=complex)
        k = np.arange(self.order + 1)
        spec[:self.order + 1] = n * self.coef * (-1.0) ** k
        return x, np.fft.irfft(spec, n)


def build_fejer(order, period) -> FejerKernel:
    """Fejer-smoothed step of order ``order`` on a domain of length ``period``."""
    return FejerKernel(order, period)


# mollifier kernels -------------------------------------------------------------


class _Bump:
    """``phi(s) = exp(-1/(s(1-s)))/Z`` on ``(0, 1)``, zero elsewhere, unit mass."""

    _nodes, _weights = np.polynomial.legendre.leggauss(64)

    def __init__(self):
        z, _ = integrate.quad(self._raw, 0.0, 1.0, epsabs=1e-16, epsrel=1e-14)
        self.Z = z

    @staticmethod
    def _raw(s):
        s = np.asarray(s, dtype=float)
        inside = (s > 0) & (s < 1)
        q = np.where(inside, s * (1 - s), 1.0)
        return np.where(inside, np.exp(-1.0 / q), 0.0)

    def __call__(self, s, deriv=0):
        """``phi``, ``phi'`` or ``phi''`` at ``s``."""
        s = np.asarray(s, dtype=float)
        inside = (s > 0) & (s < 1)
        p = np.where(inside, s * (1 - s), 0.5)
        e = np.where(inside, np.exp(-1.0 / p), 0.0) / self.Z
        if deriv == 0:
            return e
        dq = (1 - 2 * s) / p ** 2
        if deriv == 1:
            return e * dq
        if deriv == 2:
            ddq = -2.0 / p ** 2 - 2.0 * (1 - 2 * s) ** 2 / p ** 3
            return e * (dq * dq + ddq)
        raise InvalidParameterError("bump derivatives available up to order 2")

    def cdf(self, s):
        shape = np.shape(s)
        s = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, 1.0)
        out = (s >= 1.0).astype(float)
        inside = (s > 0) & (s < 1)
        si = s[inside]
        pts = 0.5 * si[:, None] * (1 + self._nodes)
        out[inside] = 0.5 * si * (self._weights * self(pts)).sum(-1)
        return out.reshape(shape)


bump = _Bump()


class MollifierKernel(KillingKernel):
    """Periodised smooth step built from the unit bump.

    On the real line the step is ``S(y) = 1 - Phi((y - shift)/eps)`` with
    ``Phi`` the bump's distribution function, so ``S = 1`` for
    ``y <= shift`` and ``S = 0`` for ``y >= shift + eps``.  The periodic
    kernel is ``sum_k S(y + kL) - S(y + kL + L/2)``, a copy of the step with
    a mirrored rise at the wrap point.
    """

    def __init__(self, eps, period, shift=0.0):
        if not eps > 0:
            raise InvalidParameterError("mollifier width eps must be positive")
        if not period > 0 or 4 * (abs(shift) + eps) >= period:
            raise InvalidParameterError("mollifier transition must be well inside the period")
        self.eps = float(eps)
        self.period = float(period)
        self.shift = float(shift)

    def __repr__(self):
        return f"MollifierKernel(eps={self.eps}, period={self.period}, shift={self.shift})"

    def _step(self, y, deriv):
        s = (y - self.shift) / self.eps
        if deriv == 0:
            return 1.0 - bump.cdf(s)
        out = np.zeros(s.shape)
        inside = (s > 0) & (s < 1)
        out[inside] = -bump(s[inside], deriv - 1) / self.eps ** deriv
        return out

    def eval(self, x, deriv=0):
        L = self.period
        y = np.mod(np.asarray(x, dtype=float) + 0.5 * L, L) - 0.5 * L
        out = np.zeros(y.shape)
        for k in (-1, 0, 1):
            out += self._step(y + k * L, deriv) - self._step(y + k * L + 0.5 * L, deriv)
        return out


@dataclass(frozen=True)
class MollifierPair:
    """Smooth kernels with ``under <= 1{x <= 0} <= over`` on the central half period."""

    under: MollifierKernel
    over: MollifierKernel
    eps: float

    def descriptor(self):
        return {"type": "mollifier", "eps": self.eps, "period": self.over.period}


def build_mollifier_pair(eps, period) -> MollifierPair:
    """Bracketing pair of width ``eps``.

    ``over`` makes its transition on ``[0, eps]`` and ``under`` on
    ``[-eps, 0]``, so ``under(x) = over(x + eps)``.
    """
    if not eps > 0:
        raise InvalidParameterError("mollifier width eps must be positive")
    over = MollifierKernel(eps, period, shift=0.0)
    under = MollifierKernel(eps, period, shift=-eps)
    return MollifierPair(under=under, over=over, eps=float(eps))


def eval_shifted(kernel: KillingKernel, b, grid):
    """``(psi_b, psi_{x,b}, psi_{xx,b}, phi_b)`` sampled at the nodes of ``grid``,
    where ``psi_b(x) = psi(x - b)`` and ``phi_b = psi_b^2 - psi_b``."""
    psi, dpsi, ddpsi = kernel.on_grid(grid, b)
    return psi, dpsi, ddpsi, psi * psi - psi


def kernel_from_descriptor(desc: dict, period=None):
    kind = desc.get("type")
    L = desc.get("period", period)
    if L is None:
        raise InvalidParameterError("kernel descriptor needs a period")
    if kind == "fejer":
        return build_fejer(desc["order"], L)
    if kind == "mollifier":
        return build_mollifier_pair(desc["eps"], L)
    raise InvalidParameterError(f"unknown kernel type {kind!r}")
