"""Time reparametrization removing a linear velocity force from a 1-DOF system.

For ``L = 1/2 K(t) ydot^2 - V(y, t)`` with force ``B(t) ydot dy``, the new time
``tau = u(t)`` with ``udot = N0 exp(int f)``, ``f = -B/K``, turns the forced
equation into the Euler-Lagrange equation of
``L*(y, y', tau) = 1/2 K(z(tau)) (N(tau) y')^2 - V(y, z(tau))``,
where ``t = z(tau)`` inverts ``u`` and ``N = udot o z``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import _fd
from .quadrature import DomainError, PiecewiseChebyshev
from .quadrature import integrate as _quad

__all__ = [
    "Reduced1D",
    "MultiplierProfile",
    "Reparametrization",
    "HamiltonianForm",
    "DomainError",
    "multiplier_profile",
    "build_reparametrization",
    "hamiltonize",
    "transformed_lagrangian",
    "hamiltonian_form",
    "integrate_reduced1d",
    "equivalence_paths",
    "verify_equivalence",
    "transformed_period",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_STALLS = 8


@dataclass(frozen=True)
class Reduced1D:
    """``K(t) > 0``, potential ``V(y, t)`` and force coefficient ``B(t)``.

    ``alpha`` and ``a`` are set for the balanced disc, where they fix the
    default normalization ``N0 = a(0) ** -alpha``.
    """

    K: Callable
    V: Callable
    B: Callable
    dK: Optional[Callable] = None
    dV_dy: Optional[Callable] = None
    alpha: Optional[float] = None
    a: Optional[Callable] = None

    def K_dot(self, t):
        return float(self.dK(t)) if self.dK is not None else float(_fd.derivative(self.K, t))

    def V_y(self, y, t):
        if self.dV_dy is not None:
            return float(self.dV_dy(y, t))
        return float(_fd.derivative(lambda s: self.V(s, t), y))

    def lagrangian(self, y, ydot, t):
        return 0.5 * self.K(t) * ydot**2 - self.V(y, t)

    def accel(self, y, ydot, t):
        """``yddot`` from ``d/dt(K ydot) = -dV/dy + B ydot``."""
        K = self.K(t)
        if not K > 0:
            raise DomainError(f"K(t) = {K} is not positive at t={t}")
        return (-self.V_y(y, t) + self.B(t) * ydot - self.K_dot(t) * ydot) / K

    def default_N0(self):
        if self.alpha is not None and self.a is not None:
            return float(self.a(0.0)) ** (-self.alpha)
        return 1.0


class MultiplierProfile:
    """``udot(t) = N0 exp(int_{t0}^t f)``, callable on ``interval``."""

    def __init__(self, log_rate: PiecewiseChebyshev, t0, N0):
        self.log_rate = log_rate
        self.t0 = float(t0)
        self.N0 = float(N0)

    @property
    def interval(self):
        return self.log_rate.domain

    def __call__(self, t):
        return self.N0 * np.exp(self.log_rate(t))


def multiplier_profile(r: Reduced1D, t0=0.0, N0=1.0, t_interval=None) -> MultiplierProfile:
    """Solve ``d ln(udot)/dt = -B/K`` with ``udot(t0) = N0``.

    ``t_interval`` defaults to ``(t0, t0 + 10)``.
    """
    if not N0 > 0:
        raise ValueError("N0 must be positive")
    lo, hi = t_interval if t_interval is not None else (t0, t0 + 10.0)
    if not lo <= t0 <= hi:
        raise DomainError(f"t0={t0} outside {(lo, hi)}")

    def f(t):
        K = r.K(t)
        if not K > 0:
            raise DomainError(f"K vanishes or is negative at t={t}")
        return -r.B(t) / K

    rate = PiecewiseChebyshev.fit(np.vectorize(f, otypes=[float]), lo, hi)
    return MultiplierProfile(rate.integral(anchor=t0, value=0.0), t0, N0)


class Reparametrization:
    """``tau = u(t)``, its inverse ``t = z(tau)`` and ``N(tau) = udot(z(tau))``."""

    def __init__(self, udot: PiecewiseChebyshev, t0, tau0):
        if not udot.min_sampled() > 0:
            raise DomainError("udot must stay positive on the interval")
        self.udot = udot
        self.uddot = udot.derivative()
        self.u = udot.integral(anchor=t0, value=tau0)
        self.t0 = float(t0)
        self.tau0 = float(tau0)
        self.N0 = udot(t0)
        self.t_interval = udot.domain
        self._u_breaks = self.u.node_values()
        self.tau_interval = (float(self._u_breaks[0]), float(self._u_breaks[-1]))

    def _z(self, tau):
        lo_tau, hi_tau = self.tau_interval
        slack = 1e-12 * max(1.0, abs(lo_tau), abs(hi_tau))
        if tau < lo_tau - slack or tau > hi_tau + slack:
            raise DomainError(f"tau={tau} outside {self.tau_interval}")
        br = self.u.breaks
        k = int(np.clip(np.searchsorted(self._u_breaks, tau) - 1, 0, len(br) - 2))
        a, b = br[k], br[k + 1]
        ua, ub = self._u_breaks[k], self._u_breaks[k + 1]
        t = a + (b - a) * (tau - ua) / (ub - ua) if ub > ua else a
        last = np.inf
        stalls = 0
        while stalls < NEWTON_MAX_STALLS:
            g = self.u(t) - tau
            if g > 0:
                b = t
            else:
                a = t
            dt = g / self.udot(t)
            t_new = t - dt
            if abs(dt) >= last or not a <= t_new <= b:
                stalls += 1
                t_new = min(max(t_new, a), b)
            last = abs(dt)
            t = t_new
            if abs(dt) <= NEWTON_TOL * max(1.0, abs(t)):
                return t
        # bisection fallback on the bracket maintained above
        while b - a > NEWTON_TOL * max(1.0, abs(a)):
            mid = 0.5 * (a + b)
            if self.u(mid) > tau:
                b = mid
            else:
                a = mid
        return 0.5 * (a + b)

    def z(self, tau):
        if np.ndim(tau) == 0:
            return self._z(float(tau))
        return np.array([self._z(x) for x in np.asarray(tau, dtype=float)])

    def N(self, tau):
        return self.udot(self.z(tau))

    def dN(self, tau):
        """``dN/dtau = uddot(z) / udot(z)``."""
        t = self.z(tau)
        return self.uddot(t) / self.udot(t)


def build_reparametrization(udot, t0=0.0, tau0=0.0, t_interval=None) -> Reparametrization:
    """Integrate ``udot`` from ``(t0, tau0)`` and set up the inverse ``z``."""
    if t_interval is None:
        if isinstance(udot, MultiplierProfile):
            t_interval = udot.interval
        else:
            t_interval = (t0, t0 + 10.0)
    lo, hi = t_interval
    if not lo <= t0 <= hi:
        raise DomainError(f"t0={t0} outside {t_interval}")
    if isinstance(udot, MultiplierProfile):
        # exp of a polynomial is not a polynomial; re-fit on the same panels
        fit = PiecewiseChebyshev.fit(udot, lo, hi)
    else:
        fit = PiecewiseChebyshev.fit(np.vectorize(lambda s: float(udot(s)), otypes=[float]), lo, hi)
    return Reparametrization(fit, t0, tau0)


def hamiltonize(r: Reduced1D, t_interval, t0=0.0, tau0=0.0, N0=None):
    """Profile and reparametrization with the default normalization."""
    N0 = r.default_N0() if N0 is None else N0
    prof = multiplier_profile(r, t0, N0, t_interval)
    return prof, build_reparametrization(prof, t0, tau0, t_interval)


def transformed_lagrangian(r: Reduced1D, rep: Reparametrization) -> Callable:
    def L_star(y, yp, tau):
        t = rep.z(tau)
        return 0.5 * r.K(t) * (rep.udot(t) * yp) ** 2 - r.V(y, t)

    return L_star


@dataclass(frozen=True)
class HamiltonianForm:
    H: Callable
    rhs: Callable
    momentum: Callable


def hamiltonian_form(r: Reduced1D, rep: Reparametrization) -> HamiltonianForm:
    """``H* = p^2 / (2 K(z) N^2) + V(y, z)`` with Hamilton's equations in ``tau``."""

    def mass(tau):
        t = rep.z(tau)
        return r.K(t) * rep.udot(t) ** 2, t

    def H(y, p, tau):
        M, t = mass(tau)
        return p**2 / (2.0 * M) + r.V(y, t)

    def rhs(tau, y, p):
        M, t = mass(tau)
        return p / M, -r.V_y(y, t)

    def momentum(y, yp, tau):
        return mass(tau)[0] * yp

    return HamiltonianForm(H, rhs, momentum)


def integrate_reduced1d(r: Reduced1D, y0, v0, t_eval, method="DOP853", rtol=1e-12, atol=1e-12):
    """Integrate the forced equation in the original time; returns ``(y, ydot)``."""
    t_eval = np.asarray(t_eval, dtype=float)

    def fun(t, s):
        return [s[1], r.accel(s[0], s[1], t)]

    sol = solve_ivp(fun, (t_eval[0], t_eval[-1]), [y0, v0], method=method, t_eval=t_eval, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise RuntimeError(sol.message)
    return sol.y[0], sol.y[1]


def equivalence_paths(r, rep, y0, v0, horizon, t_start=None, samples=201, rtol=1e-12, atol=1e-12):
    """Both pipelines on a shared t-grid: ``(t, y_direct, y_reparametrized)``."""
    t_start = rep.t0 if t_start is None else float(t_start)
    t_grid = np.linspace(t_start, t_start + horizon, samples)
    yA, _ = integrate_reduced1d(r, y0, v0, t_grid, rtol=rtol, atol=atol)

    tau_grid = rep.u(t_grid)

    def fun(tau, s):
        y, yp = s
        t = rep.z(tau)
        N = rep.udot(t)
        dN = rep.uddot(t) / N
        K = r.K(t)
        P = K * N * N
        dP = r.K_dot(t) * N + 2.0 * K * N * dN
        return [yp, (-r.V_y(y, t) - dP * yp) / P]

    yp0 = v0 / rep.udot(t_start)
    sol = solve_ivp(fun, (tau_grid[0], tau_grid[-1]), [y0, yp0], method="DOP853", t_eval=tau_grid, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise RuntimeError(sol.message)
    return t_grid, yA, sol.y[0]


def verify_equivalence(r: Reduced1D, rep: Reparametrization, y0, v0, horizon, **kw) -> float:
    """Max ``|y_direct(t) - y_reparametrized(t)|`` over ``[t0, t0 + horizon]``."""
    _, yA, yB = equivalence_paths(r, rep, y0, v0, horizon, **kw)
    return float(np.max(np.abs(yA - yB)))


def transformed_period(a: Callable, T: float, alpha: float) -> float:
    """``int_0^T a(s)^-alpha ds``: the period in the new time."""
    return _quad(np.vectorize(lambda s: float(a(s)) ** (-alpha), otypes=[float]), 0.0, T)
