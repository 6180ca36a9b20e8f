"""Affine nonholonomic constraints in solved normal form.

The last ``r`` velocities are expressed through the first ``m``::

    qdot[m + nu] = sum_i a[nu, i](q, t) * qdot[i] + a0[nu](q, t)

Angular coordinates are never wrapped; everything here is chart-local.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import _fd
from ._fd import EvaluationError

__all__ = [
    "Dimensions",
    "ConstraintSpec",
    "ConstraintJet",
    "CurvatureCoeffs",
    "EvaluationError",
    "reconstruct_velocity",
    "curvature_coeffs",
    "curvature_from_jet",
    "contact_invariant",
]


@dataclass(frozen=True)
class Dimensions:
    """Coordinate counts: ``n = m + r``."""

    m: int
    r: int

    def __post_init__(self):
        if self.m < 1 or self.r < 0:
            raise ValueError(f"need m >= 1 and r >= 0, got m={self.m}, r={self.r}")

    @property
    def n(self) -> int:
        return self.m + self.r


class ConstraintJet(NamedTuple):
    """Constraint coefficients and their first partials at one (q, t)."""

    a: np.ndarray  # (r, m)
    a0: np.ndarray  # (r,)
    da: np.ndarray  # (n, r, m), da[s] = d a / d q^s
    da_t: np.ndarray  # (r, m)
    da0: np.ndarray  # (n, r)
    da0_t: np.ndarray  # (r,)


@dataclass(frozen=True)
class ConstraintSpec:
    """Coefficients ``a`` (r x m) and ``a0`` (r,) of the normal-form constraint.

    The optional ``*_dq`` / ``*_dt`` evaluators give analytic partials; any
    that are missing are replaced by central finite differences.
    """

    dims: Dimensions
    coeff: Callable
    affine: Optional[Callable] = None
    coeff_dq: Optional[Callable] = None
    coeff_dt: Optional[Callable] = None
    affine_dq: Optional[Callable] = None
    affine_dt: Optional[Callable] = None

    @classmethod
    def null(cls, dims: Dimensions) -> "ConstraintSpec":
        """Constraint with all coefficients zero (constrained velocities vanish)."""
        n, r, m = dims.n, dims.r, dims.m
        return cls(
            dims,
            coeff=lambda q, t: np.zeros((r, m)),
            affine=lambda q, t: np.zeros(r),
            coeff_dq=lambda q, t: np.zeros((n, r, m)),
            coeff_dt=lambda q, t: np.zeros((r, m)),
            affine_dq=lambda q, t: np.zeros((n, r)),
            affine_dt=lambda q, t: np.zeros(r),
        )

    @property
    def homogeneous(self) -> bool:
        return self.affine is None

    def a(self, q, t):
        r, m = self.dims.r, self.dims.m
        return _fd.checked(self.coeff(q, t), "constraint coefficient", q, t).reshape(r, m)

    def a0(self, q, t):
        if self.affine is None:
            return np.zeros(self.dims.r)
        return _fd.checked(self.affine(q, t), "affine constraint term", q, t).reshape(self.dims.r)

    def da(self, q, t):
        n, r, m = self.dims.n, self.dims.r, self.dims.m
        if self.coeff_dq is not None:
            return np.asarray(self.coeff_dq(q, t), dtype=float).reshape(n, r, m)
        return _fd.partials_q(self.a, q, t)

    def da_t(self, q, t):
        if self.coeff_dt is not None:
            return np.asarray(self.coeff_dt(q, t), dtype=float).reshape(self.dims.r, self.dims.m)
        return _fd.partial_t(self.a, q, t)

    def da0(self, q, t):
        n, r = self.dims.n, self.dims.r
        if self.affine is None:
            return np.zeros((n, r))
        if self.affine_dq is not None:
            return np.asarray(self.affine_dq(q, t), dtype=float).reshape(n, r)
        return _fd.partials_q(self.a0, q, t)

    def da0_t(self, q, t):
        if self.affine is None:
            return np.zeros(self.dims.r)
        if self.affine_dt is not None:
            return np.asarray(self.affine_dt(q, t), dtype=float).reshape(self.dims.r)
        return _fd.partial_t(self.a0, q, t)

    def jet(self, q, t) -> ConstraintJet:
        q = np.asarray(q, dtype=float)
        return ConstraintJet(
            self.a(q, t), self.a0(q, t), self.da(q, t), self.da_t(q, t), self.da0(q, t), self.da0_t(q, t)
        )


@dataclass(frozen=True)
class CurvatureCoeffs:
    """Curvature coefficients at ``(q, t)``.

    ``A_ij[nu, i, j]`` pairs two base directions, ``A_i[nu, i]`` pairs a base
    direction with the time direction.
    """

    A_ij: np.ndarray
    A_i: np.ndarray
    q: np.ndarray
    t: float


def _check_dims(spec, q, v=None):
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.dims.n,):
        raise ValueError(f"q must have shape ({spec.dims.n},), got {q.shape}")
    if v is not None:
        v = np.asarray(v, dtype=float)
        if v.shape != (spec.dims.m,):
            raise ValueError(f"v must have shape ({spec.dims.m},), got {v.shape}")
    return q, v


def reconstruct_velocity(spec: ConstraintSpec, q, v, t) -> np.ndarray:
    """Full velocity ``qdot`` from the base velocities ``v``."""
    q, v = _check_dims(spec, q, v)
    return np.concatenate([v, spec.a(q, t) @ v + spec.a0(q, t)])


def curvature_from_jet(jet: ConstraintJet, m: int):
    """``(A_ij, A_i)`` from a precomputed constraint jet."""
    a, a0, da, da_t, da0, _ = jet
    # X_j(a[nu, i]) with X_j = d/dq^j + sum_mu a[mu, j] d/dq^{m+mu}
    lifted = np.transpose(da[:m], (1, 2, 0)) + np.einsum("uj,uvi->vij", a, da[m:])
    A_ij = lifted - np.swapaxes(lifted, 1, 2)
    A_i = (da_t + np.einsum("u,uvi->vi", a0, da[m:])) - (da0[:m].T + np.einsum("ui,uv->vi", a, da0[m:]))
    return A_ij, A_i


def curvature_coeffs(spec: ConstraintSpec, q, t) -> CurvatureCoeffs:
    q, _ = _check_dims(spec, q)
    A_ij, A_i = curvature_from_jet(spec.jet(q, t), spec.dims.m)
    return CurvatureCoeffs(A_ij, A_i, q, float(t))


def contact_invariant(a: Callable, b: Callable, x: float, y: float, t: float) -> float:
    """Coefficient of dx^dy^dt in alpha^d(alpha) for alpha = dx - a dy - b dt.

    ``a`` and ``b`` are scalar fields ``f(x, y, t)``. A nonzero value means the
    constraint ``xdot - a ydot - b = 0`` is nonholonomic at the point.
    """

    def d(f, k):
        p = [float(x), float(y), float(t)]
        h = _fd.step(p[k])
        hi, lo = list(p), list(p)
        hi[k] += h
        lo[k] -= h
        val = (f(*hi) - f(*lo)) / (2.0 * h)
        if not np.isfinite(val):
            raise EvaluationError(f"non-finite derivative at (x, y, t)={p}")
        return val

    av, bv = a(x, y, t), b(x, y, t)
    return float(d(a, 2) - d(b, 1) + bv * d(a, 0) - av * d(b, 0))
