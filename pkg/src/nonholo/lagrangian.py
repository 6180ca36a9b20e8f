"""Natural time-dependent Lagrangians ``L = 1/2 K(qdot, qdot) + Delta(qdot) - V``."""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import _fd
from .geometry import ConstraintSpec, Dimensions, reconstruct_velocity

__all__ = [
    "NaturalLagrangianSpec",
    "LagrangianFunction",
    "LagrangianJet",
    "ForceSpec",
    "lagrangian_value",
    "fiber_derivative",
    "energy",
    "constrained_lagrangian",
    "kappa_momenta",
]


class LagrangianJet(NamedTuple):
    K: np.ndarray  # (n, n)
    dK: np.ndarray  # (n, n, n), dK[s] = dK/dq^s
    K_t: np.ndarray
    D: np.ndarray  # (n,)
    dD: np.ndarray  # (n, n), dD[s, i] = dDelta_i/dq^s
    D_t: np.ndarray
    dV: np.ndarray  # (n,)


@dataclass(frozen=True)
class NaturalLagrangianSpec:
    """Kinetic metric, one-form and potential of a natural Lagrangian.

    ``oneform`` and ``potential`` may be omitted (identically zero). Partial
    evaluators are optional; finite differences fill in the gaps.
    """

    dims: Dimensions
    metric: Callable
    oneform: Optional[Callable] = None
    potential: Optional[Callable] = None
    metric_dq: Optional[Callable] = None
    metric_dt: Optional[Callable] = None
    oneform_dq: Optional[Callable] = None
    oneform_dt: Optional[Callable] = None
    potential_dq: Optional[Callable] = None

    def K(self, q, t):
        n = self.dims.n
        return _fd.checked(self.metric(q, t), "metric", q, t).reshape(n, n)

    def D(self, q, t):
        if self.oneform is None:
            return np.zeros(self.dims.n)
        return _fd.checked(self.oneform(q, t), "one-form", q, t).reshape(self.dims.n)

    def V(self, q, t):
        if self.potential is None:
            return 0.0
        return float(_fd.checked(self.potential(q, t), "potential", q, t))

    def dK(self, q, t):
        n = self.dims.n
        if self.metric_dq is not None:
            return np.asarray(self.metric_dq(q, t), dtype=float).reshape(n, n, n)
        return _fd.partials_q(self.K, q, t)

    def K_t(self, q, t):
        if self.metric_dt is not None:
            return np.asarray(self.metric_dt(q, t), dtype=float).reshape(self.dims.n, self.dims.n)
        return _fd.partial_t(self.K, q, t)

    def dD(self, q, t):
        n = self.dims.n
        if self.oneform is None:
            return np.zeros((n, n))
        if self.oneform_dq is not None:
            return np.asarray(self.oneform_dq(q, t), dtype=float).reshape(n, n)
        return _fd.partials_q(self.D, q, t)

    def D_t(self, q, t):
        if self.oneform is None:
            return np.zeros(self.dims.n)
        if self.oneform_dt is not None:
            return np.asarray(self.oneform_dt(q, t), dtype=float).reshape(self.dims.n)
        return _fd.partial_t(self.D, q, t)

    def dV(self, q, t):
        if self.potential is None:
            return np.zeros(self.dims.n)
        if self.potential_dq is not None:
            return np.asarray(self.potential_dq(q, t), dtype=float).reshape(self.dims.n)
        return _fd.partials_q(self.V, q, t)

    def jet(self, q, t) -> LagrangianJet:
        q = np.asarray(q, dtype=float)
        return LagrangianJet(
            self.K(q, t), self.dK(q, t), self.K_t(q, t), self.D(q, t), self.dD(q, t), self.D_t(q, t), self.dV(q, t)
        )

    def check_positive_definite(self, q, t) -> bool:
        try:
            np.linalg.cholesky(self.K(q, t))
        except np.linalg.LinAlgError:
            return False
        return True


@dataclass(frozen=True)
class LagrangianFunction:
    """Arbitrary regular Lagrangian ``value(q, qdot, t)``.

    Only the multiplier formulation accepts it; all derivatives are finite
    differences, so expect roughly 1e-8 relative accuracy.
    """

    dims: Dimensions
    value: Callable


@dataclass(frozen=True)
class ForceSpec:
    """Non-potential generalized force ``F(q, qdot, t)`` as an n-covector."""

    eval: Callable

    def __call__(self, q, qdot, t):
        return _fd.checked(self.eval(q, qdot, t), "force", q, t)


def lagrangian_value(L: NaturalLagrangianSpec, q, qdot, t) -> float:
    qdot = np.asarray(qdot, dtype=float)
    return float(0.5 * qdot @ L.K(q, t) @ qdot + L.D(q, t) @ qdot - L.V(q, t))


def fiber_derivative(L: NaturalLagrangianSpec, q, qdot, t) -> np.ndarray:
    """Momentum covector ``K qdot + Delta``."""
    return L.K(q, t) @ np.asarray(qdot, dtype=float) + L.D(q, t)


def energy(L: NaturalLagrangianSpec, q, qdot, t) -> float:
    qdot = np.asarray(qdot, dtype=float)
    return float(0.5 * qdot @ L.K(q, t) @ qdot + L.V(q, t))


def constrained_lagrangian(L: NaturalLagrangianSpec, spec: ConstraintSpec, q, v, t) -> float:
    return lagrangian_value(L, q, reconstruct_velocity(spec, q, v, t), t)


def kappa_momenta(L: NaturalLagrangianSpec, spec: ConstraintSpec, q, v, t) -> np.ndarray:
    """Momenta conjugate to the constrained velocities.

    Differentiation happens first, then the constraint is substituted.
    """
    qdot = reconstruct_velocity(spec, q, v, t)
    return fiber_derivative(L, q, qdot, t)[spec.dims.m:]
