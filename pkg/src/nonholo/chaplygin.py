"""Abelian Chaplygin reduction with cyclic fiber coordinates.

The fiber coordinates are the constrained ones, ``q[m:]``. When nothing
depends on them, the constrained Lagrangian descends to the base ``y = q[:m]``
and the reduced equations read::

    d/dt dL_red/dydot = dL_red/dy + F_red - JK
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _fd
from .dynamics import MechState, NonholonomicSystem, Trajectory, _voronec, constraint_residual, output_times, solve
from .geometry import ConstraintSpec, Dimensions, curvature_coeffs
from .lagrangian import ForceSpec, NaturalLagrangianSpec

__all__ = [
    "NotChaplyginError",
    "ReducedSystem",
    "reduce_abelian",
    "sigma_tensor",
    "affine_horizontal_lift",
    "reconstruct",
]

PROBE_TOL = 1e-8


class NotChaplyginError(ValueError):
    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


def _full_point(sys, y, fiber=None):
    fiber = np.zeros(sys.dims.r) if fiber is None else np.asarray(fiber, dtype=float)
    return np.concatenate([np.asarray(y, dtype=float), fiber])


def affine_horizontal_lift(sys: NonholonomicSystem, y, xi, t, fiber_point=None) -> np.ndarray:
    """``(xi, a xi + a0)`` at the configuration ``(y, fiber_point)``."""
    q = _full_point(sys, y, fiber_point)
    xi = np.asarray(xi, dtype=float)
    return np.concatenate([xi, sys.constraint.a(q, t) @ xi + sys.constraint.a0(q, t)])


def sigma_tensor(sys: NonholonomicSystem, y, xi1, xi2, xi3, t) -> float:
    """``K(H xi1)`` paired with the curvature on ``(xi2, xi3)``, summed over the fiber."""
    q = _full_point(sys, y)
    m = sys.dims.m
    a = sys.constraint.a(q, t)
    xi1 = np.asarray(xi1, dtype=float)
    H1 = np.concatenate([xi1, a @ xi1])
    kH = (sys.lagrangian.K(q, t) @ H1)[m:]
    A_ij = curvature_coeffs(sys.constraint, q, t).A_ij
    return float(np.einsum("v,vij,i,j->", kH, A_ij, np.asarray(xi2, dtype=float), np.asarray(xi3, dtype=float)))


def _probe(sys: NonholonomicSystem, points=4, seed=0):
    """Raise unless every ingredient is independent of the fiber coordinates."""
    rng = np.random.default_rng(seed)
    n, m = sys.dims.n, sys.dims.m
    L, C = sys.lagrangian, sys.constraint
    names = sys.names
    for _ in range(points):
        q = rng.uniform(-1, 1, n)
        qd = rng.uniform(-1, 1, n)
        t = float(rng.uniform(0, 1))
        fields = [("metric", L.K), ("one-form", L.D), ("potential", L.V), ("constraint", C.a), ("affine term", C.a0)]
        if sys.force is not None:
            fields.append(("force", lambda x, tt: sys.force(x, qd, tt)))
        for what, fun in fields:
            d = _fd.partials_q(fun, q, t)
            scale = max(1.0, float(np.max(np.abs(fun(q, t)))))
            for k in range(m, n):
                err = float(np.max(np.abs(d[k]))) if np.size(d[k]) else 0.0
                if err > PROBE_TOL * scale:
                    raise NotChaplyginError(
                        f"{what} depends on fiber coordinate {names[k]} (|d/d{names[k]}| = {err:.3g} at q={q.tolist()}, t={t:.3g})",
                        names[k],
                    )


@dataclass(frozen=True)
class ReducedSystem:
    """Reduced dynamics on the base ``y`` of an Abelian Chaplygin system."""

    full: NonholonomicSystem

    @property
    def base_dims(self) -> int:
        return self.full.dims.m

    def _lift_data(self, y, t):
        q = _full_point(self.full, y)
        C = self.full.constraint
        P = np.vstack([np.eye(self.base_dims), C.a(q, t)])
        theta = np.concatenate([np.zeros(self.base_dims), C.a0(q, t)])
        return q, P, theta

    def K_red(self, y, t):
        q, P, _ = self._lift_data(y, t)
        return P.T @ self.full.lagrangian.K(q, t) @ P

    def D_red(self, y, t):
        q, P, theta = self._lift_data(y, t)
        L = self.full.lagrangian
        return P.T @ (L.K(q, t) @ theta + L.D(q, t))

    def V_red(self, y, t):
        q, _, theta = self._lift_data(y, t)
        L = self.full.lagrangian
        return L.V(q, t) - 0.5 * theta @ L.K(q, t) @ theta - L.D(q, t) @ theta

    def partials(self, y, t):
        """Exact first partials of the reduced data by the product rule.

        Returns ``(dK_red, K_red_t, dD_red, D_red_t, dV_red)`` with the
        same layout as :class:`LagrangianJet`.
        """
        q, P, theta = self._lift_data(y, t)
        m = self.base_dims
        L, C = self.full.lagrangian, self.full.constraint
        K, dK, K_t, D, dD, D_t, dV = L.jet(q, t)
        _, _, da, da_t, da0, da0_t = C.jet(q, t)
        zm = np.zeros((m, m))
        # derivatives along y^s (s < m) followed by the time derivative
        dP = [np.vstack([zm, da[s]]) for s in range(m)] + [np.vstack([zm, da_t])]
        dth = [np.concatenate([np.zeros(m), da0[s]]) for s in range(m)] + [np.concatenate([np.zeros(m), da0_t])]
        dKs = list(dK[:m]) + [K_t]
        dDs = list(dD[:m]) + [D_t]
        Kth = K @ theta + D
        dKr, dDr = [], []
        for Pk, thk, Kk, Dk in zip(dP, dth, dKs, dDs):
            dKr.append(Pk.T @ K @ P + P.T @ Kk @ P + P.T @ K @ Pk)
            dDr.append(Pk.T @ Kth + P.T @ (Kk @ theta + K @ thk + Dk))
        dVr = np.array(
            [dV[s] - theta @ K @ dth[s] - 0.5 * theta @ dK[s] @ theta - dD[s] @ theta - D @ dth[s] for s in range(m)]
        )
        return np.array(dKr[:m]), dKr[m], np.array(dDr[:m]), dDr[m], dVr

    def L_red(self, y, ydot, t) -> float:
        ydot = np.asarray(ydot, dtype=float)
        return float(0.5 * ydot @ self.K_red(y, t) @ ydot + self.D_red(y, t) @ ydot - self.V_red(y, t))

    def F_red(self, y, ydot, t) -> np.ndarray:
        if self.full.force is None:
            return np.zeros(self.base_dims)
        q, P, theta = self._lift_data(y, t)
        return P.T @ self.full.force(q, P @ np.asarray(ydot, dtype=float) + theta, t)

    def JK(self, y, ydot, t) -> np.ndarray:
        q, P, theta = self._lift_data(y, t)
        ydot = np.asarray(ydot, dtype=float)
        L = self.full.lagrangian
        qd = P @ ydot + theta
        kappa = (L.K(q, t) @ qd + L.D(q, t))[self.base_dims:]
        cc = curvature_coeffs(self.full.constraint, q, t)
        return -(np.einsum("v,vij,j->i", kappa, cc.A_ij, ydot) + cc.A_i.T @ kappa)

    def JK_graded(self, y, ydot, t):
        """``(JK2, JK1, JK0)`` from ``JK(y, s*ydot, t)`` at ``s = 0, 1, 2``."""
        ydot = np.asarray(ydot, dtype=float)
        f0, f1, f2 = (self.JK(y, s * ydot, t) for s in (0.0, 1.0, 2.0))
        c2 = 0.5 * (f2 - 2.0 * f1 + f0)
        return c2, f1 - f0 - c2, f0

    def as_system(self) -> NonholonomicSystem:
        """Unconstrained system on the base with ``F_red - JK`` as its force."""
        dims = Dimensions(self.base_dims, 0)
        lag = NaturalLagrangianSpec(
            dims,
            self.K_red,
            self.D_red,
            self.V_red,
            metric_dq=lambda y, t: self.partials(y, t)[0],
            metric_dt=lambda y, t: self.partials(y, t)[1],
            oneform_dq=lambda y, t: self.partials(y, t)[2],
            oneform_dt=lambda y, t: self.partials(y, t)[3],
            potential_dq=lambda y, t: self.partials(y, t)[4],
        )
        force = ForceSpec(lambda y, yd, t: self.F_red(y, yd, t) - self.JK(y, yd, t))
        names = self.full.names[: self.base_dims]
        return NonholonomicSystem(lag, ConstraintSpec.null(dims), force, names)


def reduce_abelian(sys: NonholonomicSystem, probe: bool = True) -> ReducedSystem:
    """Reduce by the translations in the fiber coordinates ``q[m:]``.

    Raises :class:`NotChaplyginError` naming the first fiber coordinate that
    something depends on.
    """
    if not isinstance(sys.lagrangian, NaturalLagrangianSpec):
        raise TypeError("reduction needs a NaturalLagrangianSpec")
    if probe:
        _probe(sys)
    return ReducedSystem(sys)


def reconstruct(
    red: ReducedSystem,
    s0: MechState,
    t_end: float,
    *,
    method: str = "RK45",
    rtol: float = 1e-10,
    atol: float = 1e-10,
    step: Optional[float] = None,
    t_eval=None,
    dt_out=None,
) -> Trajectory:
    """Integrate the reduced equations and lift them back to the full space.

    ``s0.q`` is a full configuration; the fiber coordinates are carried along
    by ``fiberdot = a ydot + a0``.
    """
    full = red.full
    base = red.as_system()
    n, m = full.dims.n, full.dims.m
    t_out = output_times(s0.t, t_end, t_eval, dt_out)

    def fun(t, s):
        y, fiber, v = s[:m], s[m:n], s[n:]
        yd, vdot = _voronec(base, y, v, t)
        q = np.concatenate([y, fiber])
        fd = full.constraint.a(q, t) @ v + full.constraint.a0(q, t)
        return np.concatenate([yd, fd, vdot])

    ys, stats = solve(fun, t_out, np.concatenate([s0.q, s0.v]), method, rtol, atol, step)
    q, v = ys[:, :n], ys[:, n:]
    qdot = np.array([full.full_velocity(qk, vk, tk) for qk, vk, tk in zip(q, v, t_out)])
    res = np.array([constraint_residual(full, MechState(qk, vk, tk, qdk)) for qk, vk, tk, qdk in zip(q, v, t_out, qdot)])
    E = np.array([full.energy(qk, qdk, tk) for qk, qdk, tk in zip(q, qdot, t_out)])
    stats["formulation"] = "reduced"
    return Trajectory(t_out, q, v, qdot, res.reshape(len(t_out), full.dims.r), E, None, stats)
