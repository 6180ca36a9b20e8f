"""Equations of motion: the Voronec closed form and a Lagrange-multiplier oracle.

The Voronec path integrates ``(q, v)`` with ``v`` the base velocities; the
constrained velocities are always reconstructed, so its trajectories satisfy
the constraint exactly. The multiplier path integrates ``(q, qdot)`` in full
and enforces the constraint only at acceleration level, so its constraint
residual is an honest drift measurement.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp

from . import _fd
from .geometry import ConstraintSpec, curvature_from_jet
from .lagrangian import ForceSpec, LagrangianFunction, NaturalLagrangianSpec, energy, fiber_derivative

__all__ = [
    "COND_MAX",
    "MechState",
    "NonholonomicSystem",
    "Trajectory",
    "DegenerateMassError",
    "DegenerateConstraintError",
    "IntegrationError",
    "voronec_rhs",
    "multiplier_rhs",
    "constraint_residual",
    "integrate",
    "rk4",
]

COND_MAX = 1e12


class DegenerateMassError(ArithmeticError):
    def __init__(self, message, q=None, t=None):
        super().__init__(message)
        self.q = q
        self.t = t


class DegenerateConstraintError(ArithmeticError):
    def __init__(self, message, q=None, t=None):
        super().__init__(message)
        self.q = q
        self.t = t


class IntegrationError(RuntimeError):
    pass


@dataclass
class MechState:
    """Configuration ``q``, base velocities ``v`` and time ``t``.

    ``qdot`` optionally carries a full velocity that need not satisfy the
    constraint (used for residual checks and the multiplier path).
    """

    q: np.ndarray
    v: np.ndarray
    t: float
    qdot: Optional[np.ndarray] = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.t = float(self.t)
        if self.qdot is not None:
            self.qdot = np.asarray(self.qdot, dtype=float)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v)) and np.isfinite(self.t)):
            raise ValueError("state entries must be finite")


@dataclass(frozen=True)
class NonholonomicSystem:
    lagrangian: Union[NaturalLagrangianSpec, LagrangianFunction]
    constraint: ConstraintSpec
    force: Optional[ForceSpec] = None
    coordinate_names: Optional[tuple] = None

    def __post_init__(self):
        if self.lagrangian.dims != self.constraint.dims:
            raise ValueError(f"dimension mismatch: {self.lagrangian.dims} vs {self.constraint.dims}")
        if self.coordinate_names is not None and len(self.coordinate_names) != self.dims.n:
            raise ValueError("coordinate_names must name every coordinate")

    @property
    def dims(self):
        return self.constraint.dims

    @property
    def names(self):
        if self.coordinate_names is not None:
            return tuple(self.coordinate_names)
        return tuple(f"q{i + 1}" for i in range(self.dims.n))

    def full_velocity(self, q, v, t):
        return np.concatenate([v, self.constraint.a(q, t) @ v + self.constraint.a0(q, t)])

    def energy(self, q, qdot, t):
        if isinstance(self.lagrangian, LagrangianFunction):
            p = _general_momentum(self.lagrangian, q, qdot, t)
            return float(p @ qdot - self.lagrangian.value(q, qdot, t))
        return energy(self.lagrangian, q, qdot, t)

    def momentum(self, q, qdot, t):
        if isinstance(self.lagrangian, LagrangianFunction):
            return _general_momentum(self.lagrangian, q, qdot, t)
        return fiber_derivative(self.lagrangian, q, qdot, t)


def _check_spd(M, q, t, error=DegenerateMassError, what="mass matrix"):
    w = np.linalg.eigvalsh(M)
    if not w[0] > 0 or w[-1] > COND_MAX * w[0]:
        raise error(f"{what} singular or ill-conditioned (eigenvalues {w.tolist()}) at q={q.tolist()}, t={t}", q, t)


def _solve_spd(M, b, q, t, error=DegenerateMassError, what="mass matrix"):
    _check_spd(M, q, t, error, what)
    return np.linalg.solve(M, b)


def _voronec(sys: NonholonomicSystem, q, v, t):
    L = sys.lagrangian
    if not isinstance(L, NaturalLagrangianSpec):
        raise TypeError("the Voronec assembly needs a NaturalLagrangianSpec")
    m = sys.dims.m
    cj = sys.constraint.jet(q, t)
    a, a0, da, da_t, da0, da0_t = cj
    qd = np.concatenate([v, a @ v + a0])
    K, dK, K_t, D, dD, D_t, dV = L.jet(q, t)

    p = K @ qd + D
    kappa = p[m:]
    dL = 0.5 * np.einsum("sij,i,j->s", dK, qd, qd) + dD @ qd - dV
    # partials of L_c pick up the q-dependence of the constraint coefficients
    dLc = dL + np.einsum("v,svi,i->s", kappa, da, v) + da0 @ kappa
    F = sys.force(q, qd, t) if sys.force is not None else np.zeros(sys.dims.n)
    A_ij, A_i = curvature_from_jet(cj, m)
    rhs = (
        dLc[:m]
        + F[:m]
        + a.T @ (dLc[m:] + F[m:])
        + np.einsum("v,vij,j->i", kappa, A_ij, v)
        + A_i.T @ kappa
    )

    # d/dt dL_c/dv = Pdot^T p + P^T (K qddot + Kdot qd + Ddot), qddot = P vdot + known
    adot = np.einsum("svi,s->vi", da, qd) + da_t
    a0dot = da0.T @ qd + da0_t
    Kdot = np.einsum("sij,s->ij", dK, qd) + K_t
    Ddot = dD.T @ qd + D_t
    P = np.vstack([np.eye(m), a])
    qdd_known = np.concatenate([np.zeros(m), adot @ v + a0dot])
    bias = adot.T @ kappa + P.T @ (K @ qdd_known + Kdot @ qd + Ddot)
    Mc = P.T @ K @ P
    vdot = _solve_spd(Mc, rhs - bias, q, t)
    return qd, vdot


def voronec_rhs(sys: NonholonomicSystem, s: MechState):
    """``(qdot, vdot)`` from the Voronec equations at state ``s``."""
    return _voronec(sys, s.q, s.v, s.t)


def _general_momentum(Lf: LagrangianFunction, q, qd, t):
    return _fd.partials_q(lambda x, tt: Lf.value(q, x, tt), qd, t)


def _general_el(Lf: LagrangianFunction, q, qd, t):
    """Mass matrix and Euler-Lagrange right-hand side by finite differences."""
    n = Lf.dims.n
    x0 = np.concatenate([q, qd, [t]])

    def f(x):
        return float(Lf.value(x[:n], x[n:2 * n], x[2 * n]))

    h = np.array([np.finfo(float).eps ** 0.25 * max(1.0, abs(xi)) for xi in x0])

    def d2(i, j):
        ei = np.zeros_like(x0)
        ej = np.zeros_like(x0)
        ei[i] = h[i]
        ej[j] = h[j]
        return (f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)) / (4 * h[i] * h[j])

    H = np.array([[d2(n + i, j) for j in range(2 * n + 1)] for i in range(n)])
    M = 0.5 * (H[:, n:2 * n] + H[:, n:2 * n].T)
    dLdq = _fd.partials_q(lambda x, tt: Lf.value(x, qd, tt), q, t)
    rhs = dLdq - H[:, :n] @ qd - H[:, 2 * n]
    return M, rhs


def _multiplier(sys: NonholonomicSystem, q, qd, t):
    n, m, r = sys.dims.n, sys.dims.m, sys.dims.r
    C = sys.constraint
    F = sys.force(q, qd, t) if sys.force is not None else np.zeros(n)
    L = sys.lagrangian
    if isinstance(L, NaturalLagrangianSpec):
        K, dK, K_t, D, dD, D_t, dV = L.jet(q, t)
        dL = 0.5 * np.einsum("sij,i,j->s", dK, qd, qd) + dD @ qd - dV
        Kdot = np.einsum("sij,s->ij", dK, qd) + K_t
        rhs_el = dL + F - Kdot @ qd - (dD.T @ qd + D_t)
        M = K
    else:
        M, rhs_el = _general_el(L, q, qd, t)
        rhs_el = rhs_el + F
    _check_spd(M, q, t)
    if r == 0:
        return np.linalg.solve(M, rhs_el), np.zeros(0)

    a, a0, da, da_t, da0, da0_t = C.jet(q, t)
    G = np.hstack([a, -np.eye(r)])
    adot = np.einsum("svi,s->vi", da, qd) + da_t
    a0dot = da0.T @ qd + da0_t
    rhs_c = -(adot @ qd[:m]) - a0dot
    # Schur complement of [M -G^T; G 0] [qdd; lam] = [rhs_el; rhs_c]
    X = np.linalg.solve(M, np.column_stack([rhs_el, G.T]))
    S = G @ X[:, 1:]
    lam = _solve_spd(S, rhs_c - G @ X[:, 0], q, t, DegenerateConstraintError, "constraint Schur complement")
    qdd = X[:, 0] + X[:, 1:] @ lam
    return qdd, lam


def multiplier_rhs(sys: NonholonomicSystem, s: MechState):
    """``(qddot, lambda)`` from Euler-Lagrange equations with multipliers.

    Uses ``s.qdot`` when present, otherwise the reconstructed admissible velocity.
    """
    qd = s.qdot if s.qdot is not None else sys.full_velocity(s.q, s.v, s.t)
    return _multiplier(sys, s.q, qd, s.t)


def constraint_residual(sys: NonholonomicSystem, s: MechState) -> np.ndarray:
    """``a qdot_base + a0 - qdot_constrained`` for the full velocity of ``s``."""
    m = sys.dims.m
    qd = s.qdot if s.qdot is not None else sys.full_velocity(s.q, s.v, s.t)
    return sys.constraint.a(s.q, s.t) @ qd[:m] + sys.constraint.a0(s.q, s.t) - qd[m:]


@dataclass
class Trajectory:
    """Sampled solution plus per-sample diagnostics (arrays indexed by sample)."""

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    qdot: np.ndarray
    residual: np.ndarray
    energy: np.ndarray
    moving_energy: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def samples(self):
        for k in range(len(self.t)):
            diag = {"constraint_residual": self.residual[k], "energy": self.energy[k]}
            if self.moving_energy is not None:
                diag["moving_energy"] = self.moving_energy[k]
            yield MechState(self.q[k], self.v[k], self.t[k], self.qdot[k]), diag


def rk4(fun, t_out, y0, step):
    """Classical fixed-step RK4 hitting every output time exactly.

    Each output interval is split into ``ceil(dt / step)`` equal substeps.
    """
    ys = [np.asarray(y0, dtype=float)]
    y = ys[0]
    nfev = 0
    for t0, t1 in zip(t_out[:-1], t_out[1:]):
        k = max(1, int(np.ceil((t1 - t0) / step - 1e-12)))
        h = (t1 - t0) / k
        t = t0
        for _ in range(k):
            k1 = fun(t, y)
            k2 = fun(t + h / 2, y + h / 2 * k1)
            k3 = fun(t + h / 2, y + h / 2 * k2)
            k4 = fun(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t0 + (_ + 1) * h
            nfev += 4
        ys.append(y)
    return np.array(ys), nfev


def output_times(t0, t_end, t_eval=None, dt_out=None, samples=101):
    if t_eval is not None:
        t_out = np.asarray(t_eval, dtype=float)
    elif dt_out is not None:
        k = int(np.floor((t_end - t0) / dt_out + 1e-9))
        t_out = t0 + dt_out * np.arange(k + 1)
        if t_out[-1] < t_end - 1e-12:
            t_out = np.append(t_out, t_end)
    else:
        t_out = np.linspace(t0, t_end, samples)
    if t_out.size < 2 or np.any(np.diff(t_out) <= 0) or abs(t_out[0] - t0) > 1e-12:
        raise ValueError("output times must start at the initial time and increase strictly")
    return t_out


def solve(fun, t_out, y0, method="RK45", rtol=1e-10, atol=1e-10, step=None):
    """Integrate ``y' = fun(t, y)`` and return ``(ys at t_out, stats)``."""
    if method == "RK4" or step is not None:
        if step is None:
            raise ValueError("fixed-step RK4 needs a step size")
        ys, nfev = rk4(fun, t_out, y0, step)
        return ys, {"integrator": "RK4", "step": step, "nfev": nfev}
    sol = solve_ivp(fun, (t_out[0], t_out[-1]), y0, method=method, t_eval=t_out, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"{method} failed at t={sol.t[-1] if sol.t.size else t_out[0]}: {sol.message}")
    return sol.y.T, {"integrator": method, "rtol": rtol, "atol": atol, "nfev": int(sol.nfev)}


def integrate(
    sys: NonholonomicSystem,
    s0: MechState,
    t_end: float,
    *,
    formulation: str = "voronec",
    method: str = "RK45",
    rtol: float = 1e-10,
    atol: float = 1e-10,
    step: Optional[float] = None,
    t_eval=None,
    dt_out: Optional[float] = None,
    moving_field: Optional[Callable] = None,
) -> Trajectory:
    """Integrate from ``s0`` to ``t_end``.

    ``formulation`` is ``"voronec"`` or ``"multiplier"``. ``step`` switches to
    fixed-step RK4. ``moving_field(q, t)`` adds the moving energy
    ``E - FL(xi)`` to the diagnostics.
    """
    n, m = sys.dims.n, sys.dims.m
    q0 = np.asarray(s0.q, dtype=float)
    v0 = np.asarray(s0.v, dtype=float)
    if q0.shape != (n,) or v0.shape != (m,):
        raise ValueError(f"initial state must have q of size {n} and v of size {m}")
    t_out = output_times(s0.t, t_end, t_eval, dt_out)

    if formulation == "voronec":

        def fun(t, y):
            qd, vdot = _voronec(sys, y[:n], y[n:], t)
            return np.concatenate([qd, vdot])

        y0 = np.concatenate([q0, v0])
    elif formulation == "multiplier":

        def fun(t, y):
            qdd, _ = _multiplier(sys, y[:n], y[n:], t)
            return np.concatenate([y[n:], qdd])

        y0 = np.concatenate([q0, sys.full_velocity(q0, v0, s0.t)])
    else:
        raise ValueError(f"unknown formulation {formulation!r}")

    ys, stats = solve(fun, t_out, y0, method, rtol, atol, step)
    q = ys[:, :n]
    if formulation == "voronec":
        v = ys[:, n:]
        qdot = np.array([sys.full_velocity(qk, vk, tk) for qk, vk, tk in zip(q, v, t_out)])
    else:
        qdot = ys[:, n:]
        v = qdot[:, :m].copy()

    residual = np.array(
        [constraint_residual(sys, MechState(qk, qdk[:m], tk, qdk)) for qk, qdk, tk in zip(q, qdot, t_out)]
    ).reshape(len(t_out), sys.dims.r)
    E = np.array([sys.energy(qk, qdk, tk) for qk, qdk, tk in zip(q, qdot, t_out)])
    J = None
    if moving_field is not None:
        J = np.array(
            [E[k] - sys.momentum(q[k], qdot[k], t_out[k]) @ np.asarray(moving_field(q[k], t_out[k]), dtype=float)
             for k in range(len(t_out))]
        )
    stats["formulation"] = formulation
    return Trajectory(t_out, q, v, qdot, residual, E, J, stats)
