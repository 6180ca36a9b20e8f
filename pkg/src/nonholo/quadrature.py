"""Piecewise Chebyshev representations for cumulative integrals.

A function is sampled on panels (adaptively bisected until the trailing
Chebyshev coefficients are negligible). Antiderivatives and derivatives are
exact on the interpolant, which keeps cumulative integrals evaluable at any
point to near machine precision.
"""

import numpy as np
from numpy.polynomial import chebyshev as C

DEFAULT_PANELS = 256
DEFAULT_DEGREE = 16


class DomainError(ValueError):
    pass


def _vector_call(f, x):
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(xi)) for xi in x])


class PiecewiseChebyshev:
    def __init__(self, breaks, coefs):
        self.breaks = np.asarray(breaks, dtype=float)
        self.coefs = [np.asarray(c, dtype=float) for c in coefs]
        if len(self.coefs) != len(self.breaks) - 1:
            raise ValueError("need one coefficient vector per panel")

    @property
    def domain(self):
        return float(self.breaks[0]), float(self.breaks[-1])

    @classmethod
    def fit(cls, f, a, b, panels=DEFAULT_PANELS, degree=DEFAULT_DEGREE, tol=1e-15, max_depth=12):
        if not b > a:
            raise ValueError(f"empty interval [{a}, {b}]")
        breaks = [a]
        coefs = []
        edges = np.linspace(a, b, panels + 1)

        def panel(lo, hi, depth):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            c = C.chebinterpolate(lambda x: _vector_call(f, mid + half * x), degree)
            if not np.all(np.isfinite(c)):
                raise DomainError(f"non-finite samples on [{lo}, {hi}]")
            scale = max(1.0, np.max(np.abs(c)))
            if depth < max_depth and np.max(np.abs(c[-3:])) > tol * scale * degree:
                panel(lo, mid, depth + 1)
                panel(mid, hi, depth + 1)
                return
            coefs.append(c)
            breaks.append(hi)

        for lo, hi in zip(edges[:-1], edges[1:]):
            panel(lo, hi, 0)
        return cls(breaks, coefs)

    def _locate(self, t):
        a, b = self.domain
        slack = 1e-12 * max(1.0, abs(a), abs(b))
        if t < a - slack or t > b + slack:
            raise DomainError(f"{t} outside [{a}, {b}]")
        k = int(np.searchsorted(self.breaks, t, side="right")) - 1
        return min(max(k, 0), len(self.coefs) - 1)

    def _panel_eval(self, k, t):
        lo, hi = self.breaks[k], self.breaks[k + 1]
        return C.chebval((2.0 * t - (lo + hi)) / (hi - lo), self.coefs[k])

    def __call__(self, t):
        if np.ndim(t) == 0:
            return float(self._panel_eval(self._locate(float(t)), float(t)))
        return np.array([self(ti) for ti in np.asarray(t, dtype=float)])

    def integral(self, anchor=None, value=0.0) -> "PiecewiseChebyshev":
        """Antiderivative taking ``value`` at ``anchor`` (default: left end)."""
        out = []
        offset = 0.0
        for k, c in enumerate(self.coefs):
            half = 0.5 * (self.breaks[k + 1] - self.breaks[k])
            ci = C.chebint(c, lbnd=-1, scl=half)
            ci[0] += offset
            offset = C.chebval(1.0, ci)
            out.append(ci)
        F = PiecewiseChebyshev(self.breaks, out)
        if anchor is not None:
            shift = value - F(anchor)
        else:
            shift = value
        for ci in F.coefs:
            ci[0] += shift
        return F

    def derivative(self) -> "PiecewiseChebyshev":
        out = []
        for k, c in enumerate(self.coefs):
            half = 0.5 * (self.breaks[k + 1] - self.breaks[k])
            out.append(C.chebder(c, scl=1.0 / half))
        return PiecewiseChebyshev(self.breaks, out)

    def node_values(self):
        """Values at the panel boundaries."""
        left = [C.chebval(-1.0, c) for c in self.coefs]
        return np.array(left + [C.chebval(1.0, self.coefs[-1])])

    def min_sampled(self, per_panel=8):
        x = np.cos(np.pi * (np.arange(per_panel) + 0.5) / per_panel)
        return min(float(np.min(C.chebval(x, c))) for c in self.coefs)


def integrate(f, a, b, **kw) -> float:
    """Definite integral of ``f`` over ``[a, b]``."""
    if a == b:
        return 0.0
    lo, hi = (a, b) if b > a else (b, a)
    val = PiecewiseChebyshev.fit(f, lo, hi, **kw).integral()(hi)
    return val if b > a else -val
