"""Built-in systems: the disc rolling on a circle of variable radius, the
damped oscillator, the variable-length pendulum and random test systems."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import NonholonomicSystem
from .geometry import ConstraintSpec, Dimensions
from .hamiltonize import Reduced1D
from .lagrangian import ForceSpec, NaturalLagrangianSpec

__all__ = [
    "RadiusProfile",
    "DiscParams",
    "sinusoidal_radius",
    "constant_radius",
    "make_disc_full",
    "make_disc_reduced",
    "make_variable_pendulum",
    "make_damped_oscillator",
    "Waves",
    "random_constraint_spec",
    "random_abelian_system",
]


@dataclass(frozen=True)
class RadiusProfile:
    """``R(t)`` with its first two derivatives."""

    R: Callable
    dR: Callable
    ddR: Callable


def sinusoidal_radius(R0: float, eps: float, T: float) -> RadiusProfile:
    """``R(t) = R0 + eps sin(2 pi t / T)``."""
    w = 2.0 * np.pi / T
    return RadiusProfile(
        lambda t: R0 + eps * np.sin(w * t),
        lambda t: eps * w * np.cos(w * t),
        lambda t: -eps * w * w * np.sin(w * t),
    )


def constant_radius(R0: float) -> RadiusProfile:
    return RadiusProfile(lambda t: R0, lambda t: 0.0, lambda t: 0.0)


@dataclass(frozen=True)
class DiscParams:
    """Disc of mass ``m``, radius ``r`` and inertia ``I`` about its center.

    ``c`` offsets the mass center from the disc center. ``I`` is taken about
    the disc center even when ``c > 0``.
    """

    m: float = 1.0
    r: float = 1.0
    I: float = 1.0
    c: float = 0.0
    g: float = 9.81
    radius: RadiusProfile = sinusoidal_radius(1.0, 0.2, 2.0 * np.pi)

    def __post_init__(self):
        if not self.m > 0 or not self.r > 0:
            raise ValueError("disc needs m > 0 and r > 0")
        if self.I < 0 or self.c < 0:
            raise ValueError("disc needs I >= 0 and c >= 0")

    @property
    def alpha(self) -> float:
        return self.I / (self.m * self.r**2 + self.I)

    def a(self, t):
        a = (self.radius.R(t) + self.r) / self.r
        if not np.all(a > 0):
            raise ValueError(f"R(t) + r must stay positive (t={t})")
        return a

    def da(self, t):
        return self.radius.dR(t) / self.r


def make_disc_full(p: DiscParams) -> NonholonomicSystem:
    """Disc rolling inside/on a circle of radius ``R(t)``, coordinates ``(phi, psi)``.

    ``phi`` locates the contact point, ``psi`` is the disc rotation; rolling
    without slipping gives ``psidot = a(t) phidot``.
    """
    if not p.I > 0:
        raise ValueError("the full disc needs I > 0 (use make_variable_pendulum for I = 0)")
    m, r, I, c, g = p.m, p.r, p.I, p.c, p.g
    R, dR, ddR = p.radius.R, p.radius.dR, p.radius.ddR
    dims = Dimensions(1, 1)

    def K(q, t):
        rho = R(t) + r
        k = c * m * rho * np.cos(q[0] - q[1])
        return np.array([[m * rho**2, k], [k, I]])

    def K_dq(q, t):
        k = c * m * (R(t) + r) * np.sin(q[0] - q[1])
        return np.array([[[0.0, -k], [-k, 0.0]], [[0.0, k], [k, 0.0]]])

    def K_dt(q, t):
        k = c * m * dR(t) * np.cos(q[0] - q[1])
        return np.array([[2 * m * (R(t) + r) * dR(t), k], [k, 0.0]])

    def D(q, t):
        return np.array([0.0, c * m * dR(t) * np.sin(q[0] - q[1])])

    def D_dq(q, t):
        k = c * m * dR(t) * np.cos(q[0] - q[1])
        return np.array([[0.0, k], [0.0, -k]])

    def D_dt(q, t):
        return np.array([0.0, c * m * ddR(t) * np.sin(q[0] - q[1])])

    def V(q, t):
        return m * g * ((R(t) + r) * np.sin(q[0]) + c * np.sin(q[1]))

    def V_dq(q, t):
        return np.array([m * g * (R(t) + r) * np.cos(q[0]), m * g * c * np.cos(q[1])])

    lag = NaturalLagrangianSpec(dims, K, D, V, K_dq, K_dt, D_dq, D_dt, V_dq)
    con = ConstraintSpec(
        dims,
        coeff=lambda q, t: np.array([[p.a(t)]]),
        coeff_dq=lambda q, t: np.zeros((2, 1, 1)),
        coeff_dt=lambda q, t: np.array([[p.da(t)]]),
    )
    return NonholonomicSystem(lag, con, None, ("phi", "psi"))


def make_disc_reduced(p: DiscParams) -> Reduced1D:
    """Reduced equation of the balanced disc in ``phi``.

    ``K = (m r^2 + I) a^2``, ``V = m r g a sin(phi)``, ``B = I a adot``.
    """
    if p.c != 0:
        raise ValueError("reduction is only available for the balanced disc (c = 0)")
    mr2 = p.m * p.r**2
    M = mr2 + p.I
    return Reduced1D(
        K=lambda t: M * p.a(t) ** 2,
        V=lambda y, t: p.m * p.r * p.g * p.a(t) * np.sin(y),
        B=lambda t: p.I * p.a(t) * p.da(t),
        dK=lambda t: 2.0 * M * p.a(t) * p.da(t),
        dV_dy=lambda y, t: p.m * p.r * p.g * p.a(t) * np.cos(y),
        alpha=p.alpha,
        a=p.a,
    )


def make_variable_pendulum(p: DiscParams) -> Reduced1D:
    """The ``I -> 0`` limit of the reduced disc: a pendulum of length ``R + r``."""
    return make_disc_reduced(DiscParams(p.m, p.r, 0.0, 0.0, p.g, p.radius))


def make_damped_oscillator(omega: float, B0: float) -> Reduced1D:
    """``yddot = -omega^2 y - B0 ydot``."""
    if B0 < 0:
        raise ValueError("B0 must be non-negative")
    w2 = omega * omega
    return Reduced1D(
        K=lambda t: 1.0,
        V=lambda y, t: 0.5 * w2 * y * y,
        B=lambda t: -B0,
        dK=lambda t: 0.0,
        dV_dy=lambda y, t: w2 * y,
    )


class Waves:
    """``C0 + sum_k C[k] sin(u[k] . q + w[k] t + phase[k])`` with exact partials."""

    def __init__(self, C0, C, u, w, phase):
        self.C0 = np.asarray(C0, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.phase = np.asarray(phase, dtype=float)

    @classmethod
    def random(cls, rng, shape, n, terms=2, amp=0.3, base=None, active=None, time_dependent=True):
        """Random waves over ``q`` (only the ``active`` coordinates enter)."""
        shape = tuple(shape)
        u = rng.normal(0.0, 1.0, (terms, n))
        if active is not None:
            mask = np.zeros(n)
            mask[list(active)] = 1.0
            u = u * mask
        w = rng.normal(0.0, 1.0, terms) if time_dependent else np.zeros(terms)
        C = rng.uniform(-amp, amp, (terms,) + shape)
        C0 = rng.uniform(-1, 1, shape) if base is None else base
        return cls(C0, C, u, w, rng.uniform(0, 2 * np.pi, terms))

    def _arg(self, q, t):
        return self.u @ np.asarray(q, dtype=float) + self.w * t + self.phase

    def _mix(self, weights):
        shape = weights.shape[:-1] + self.C.shape[1:]
        return (weights @ self.C.reshape(len(self.C), -1)).reshape(shape)

    def __call__(self, q, t):
        return self.C0 + self._mix(np.sin(self._arg(q, t)))

    def dq(self, q, t):
        return self._mix(self.u.T * np.cos(self._arg(q, t)))

    def dt(self, q, t):
        return self._mix(np.cos(self._arg(q, t)) * self.w)


def random_constraint_spec(rng, m, r, affine=True, time_dependent=True, active=None) -> ConstraintSpec:
    """Constraint with random smooth coefficients and exact partials."""
    n = m + r
    a = Waves.random(rng, (r, m), n, active=active, time_dependent=time_dependent)
    kw = {}
    if affine:
        a0 = Waves.random(rng, (r,), n, active=active, time_dependent=time_dependent)
        kw = dict(affine=a0, affine_dq=a0.dq, affine_dt=a0.dt)
    return ConstraintSpec(Dimensions(m, r), a, coeff_dq=a.dq, coeff_dt=a.dt, **kw)


def random_abelian_system(rng, m, r, affine=True, time_dependent=True, oneform=True, damping=0.0) -> NonholonomicSystem:
    """Random natural system with nothing depending on ``q[m:]``.

    The metric is a fixed well-conditioned SPD matrix plus bounded symmetric
    oscillations, so it stays positive definite everywhere. The potential
    includes a confining ``1/2 |y|^2`` term.
    """
    n = m + r
    base = range(m)
    L0 = rng.normal(0.0, 0.5, (n, n))
    K0 = L0 @ L0.T + np.eye(n)
    terms = 2
    S = rng.uniform(-1, 1, (terms, n, n))
    S = 0.5 * (S + np.swapaxes(S, 1, 2))
    # bound the oscillating part below the smallest eigenvalue of K0
    S *= 0.5 * np.linalg.eigvalsh(K0)[0] / (terms * max(np.linalg.norm(Sk, 2) for Sk in S))
    Kw = Waves.random(rng, (n, n), n, terms=terms, base=K0, active=base, time_dependent=time_dependent)
    Kw.C = S
    Vw = Waves.random(rng, (), n, active=base, time_dependent=time_dependent)
    conf = np.zeros(n)
    conf[:m] = 1.0

    def V(q, t):
        return float(Vw(q, t)) + 0.5 * float(np.sum(conf * np.asarray(q) ** 2))

    def V_dq(q, t):
        return Vw.dq(q, t) + conf * np.asarray(q)

    kw = {}
    if oneform:
        Dw = Waves.random(rng, (n,), n, active=base, time_dependent=time_dependent)
        kw = dict(oneform=Dw, oneform_dq=Dw.dq, oneform_dt=Dw.dt)
    dims = Dimensions(m, r)
    lag = NaturalLagrangianSpec(
        dims, Kw, potential=V, metric_dq=Kw.dq, metric_dt=Kw.dt, potential_dq=V_dq, **kw
    )
    con = random_constraint_spec(rng, m, r, affine, time_dependent, active=base)
    force = None
    if damping:
        mask = conf * damping
        force = ForceSpec(lambda q, qd, t: -mask * np.asarray(qd))
    return NonholonomicSystem(lag, con, force)
