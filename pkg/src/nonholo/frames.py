"""Time-dependent changes of frame ``q = g_t(x)`` and moving-frame systems.

``x`` are moving-frame coordinates, ``q`` fixed-frame ones. The frame
velocity ``omega_t`` lives on the fixed side, ``Omega_t`` on the moving side,
and ``dg_t(Omega_t) = omega_t``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import NonholonomicSystem
from .geometry import ConstraintSpec
from .lagrangian import ForceSpec, NaturalLagrangianSpec, energy, fiber_derivative

__all__ = [
    "FrameMap",
    "SingularFrameError",
    "identity_frame",
    "affine_frame",
    "rotation_frame",
    "translation_frame",
    "omega_fields",
    "transform_velocity",
    "inverse_transform_velocity",
    "transform_system",
    "moving_energy",
]


class SingularFrameError(ArithmeticError):
    pass


def _solve(J, b, x, t):
    try:
        return np.linalg.solve(J, b)
    except np.linalg.LinAlgError:
        raise SingularFrameError(f"frame jacobian singular at x={np.asarray(x).tolist()}, t={t}") from None


@dataclass(frozen=True)
class FrameMap:
    """``q = map(x, t)`` with its inverse, jacobian ``dg_t`` and ``dg/dt``."""

    map: Callable
    inverse: Callable
    jacobian: Callable
    time_derivative: Callable

    def inverted(self) -> "FrameMap":
        """The frame ``x = g_t^-1(q)``, viewed as a map from ``q`` to ``x``."""

        def jac(q, t):
            x = self.inverse(q, t)
            return np.linalg.inv(self.jacobian(x, t))

        def dt(q, t):
            x = self.inverse(q, t)
            return -_solve(self.jacobian(x, t), self.time_derivative(x, t), x, t)

        return FrameMap(self.inverse, self.map, jac, dt)


def affine_frame(A: Callable, dA: Callable, b: Callable, db: Callable) -> FrameMap:
    """``g_t(x) = A(t) x + b(t)``."""
    return FrameMap(
        map=lambda x, t: A(t) @ np.asarray(x, dtype=float) + b(t),
        inverse=lambda q, t: np.linalg.solve(A(t), np.asarray(q, dtype=float) - b(t)),
        jacobian=lambda x, t: np.asarray(A(t), dtype=float),
        time_derivative=lambda x, t: dA(t) @ np.asarray(x, dtype=float) + db(t),
    )


def identity_frame(n: int) -> FrameMap:
    eye, zero = np.eye(n), np.zeros((n, n))
    return affine_frame(lambda t: eye, lambda t: zero, lambda t: np.zeros(n), lambda t: np.zeros(n))


def rotation_frame(theta: Callable, dtheta: Callable, n: int = 2, plane=(0, 1)) -> FrameMap:
    """Rotation by ``theta(t)`` in the coordinate plane ``plane``; other axes fixed."""
    i, j = plane

    def A(t):
        c, s = np.cos(theta(t)), np.sin(theta(t))
        M = np.eye(n)
        M[i, i], M[i, j], M[j, i], M[j, j] = c, -s, s, c
        return M

    def dA(t):
        c, s = np.cos(theta(t)), np.sin(theta(t))
        w = dtheta(t)
        M = np.zeros((n, n))
        M[i, i], M[i, j], M[j, i], M[j, j] = -s * w, -c * w, c * w, -s * w
        return M

    return affine_frame(A, dA, lambda t: np.zeros(n), lambda t: np.zeros(n))


def translation_frame(shift: Callable, dshift: Callable) -> FrameMap:
    """``q = x + shift(t)``."""
    n = len(np.atleast_1d(shift(0.0)))
    eye, zero = np.eye(n), np.zeros((n, n))
    return affine_frame(
        lambda t: eye,
        lambda t: zero,
        lambda t: np.asarray(shift(t), dtype=float),
        lambda t: np.asarray(dshift(t), dtype=float),
    )


def omega_fields(f: FrameMap, x, t):
    """``(omega_t at g_t(x), Omega_t at x)``."""
    w = np.asarray(f.time_derivative(x, t), dtype=float)
    return w, _solve(f.jacobian(x, t), w, x, t)


def transform_velocity(f: FrameMap, x, xdot, t):
    """``qdot = dg_t(xdot) + omega_t``."""
    return f.jacobian(x, t) @ np.asarray(xdot, dtype=float) + f.time_derivative(x, t)


def inverse_transform_velocity(f: FrameMap, q, qdot, t):
    """``(x, xdot)`` for a fixed-frame state."""
    x = np.asarray(f.inverse(q, t), dtype=float)
    return x, _solve(f.jacobian(x, t), np.asarray(qdot, dtype=float) - f.time_derivative(x, t), x, t)


def transform_system(sys: NonholonomicSystem, f: FrameMap) -> NonholonomicSystem:
    """The same mechanics written in the moving coordinates ``x``.

    The constraint keeps the original split into base and constrained
    velocities; it is re-solved in normal form, which fails if the frame
    mixes the constrained directions into a singular block.
    """
    L = sys.lagrangian
    if not isinstance(L, NaturalLagrangianSpec):
        raise TypeError("only natural Lagrangians can be transformed")
    dims = sys.dims
    n, m = dims.n, dims.m
    x_probe = np.zeros(n)
    if np.shape(f.map(x_probe, 0.0)) != (n,):
        raise ValueError(f"frame dimension does not match the system (n={n})")
    C = sys.constraint

    def pieces(x, t):
        x = np.asarray(x, dtype=float)
        return f.map(x, t), np.asarray(f.jacobian(x, t), dtype=float), np.asarray(f.time_derivative(x, t), dtype=float)

    def kappa(x, t):
        q, J, _ = pieces(x, t)
        return J.T @ L.K(q, t) @ J

    def delta(x, t):
        q, J, w = pieces(x, t)
        return J.T @ (L.D(q, t) + L.K(q, t) @ w)

    def pot(x, t):
        q, _, w = pieces(x, t)
        return L.V(q, t) - 0.5 * w @ L.K(q, t) @ w - L.D(q, t) @ w

    def normal_form(x, t):
        q, J, w = pieces(x, t)
        G = np.hstack([C.a(q, t), -np.eye(dims.r)])
        GJ = G @ J
        c = G @ w + C.a0(q, t)
        Gf = GJ[:, m:]
        try:
            sol = np.linalg.solve(Gf, np.column_stack([GJ[:, :m], c]))
        except np.linalg.LinAlgError:
            raise SingularFrameError(f"frame makes the constraint unsolvable for the constrained velocities at x={x.tolist()}, t={t}") from None
        return -sol[:, :m], -sol[:, m]

    lag = NaturalLagrangianSpec(dims, kappa, delta, pot)
    con = ConstraintSpec(dims, lambda x, t: normal_form(x, t)[0], lambda x, t: normal_form(x, t)[1])
    force = None
    if sys.force is not None:

        def fx(x, xdot, t):
            q, J, w = pieces(x, t)
            return J.T @ sys.force(q, J @ np.asarray(xdot, dtype=float) + w, t)

        force = ForceSpec(fx)
    return NonholonomicSystem(lag, con, force, sys.coordinate_names)


def moving_energy(L: NaturalLagrangianSpec, xi: Callable, q, qdot, t) -> float:
    """``E_L - FL(xi_t)``."""
    return energy(L, q, qdot, t) - float(fiber_derivative(L, q, qdot, t) @ np.asarray(xi(q, t), dtype=float))
