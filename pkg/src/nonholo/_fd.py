"""Central finite differences used wherever analytic partials are missing."""

import numpy as np

FD_BASE_STEP = np.cbrt(np.finfo(float).eps)


class EvaluationError(ValueError):
    """A coefficient evaluator produced non-finite output."""

    def __init__(self, message, q=None, t=None):
        super().__init__(message)
        self.q = None if q is None else np.array(q, dtype=float)
        self.t = t


def step(x):
    return FD_BASE_STEP * max(1.0, abs(float(x)))


def checked(value, what, q, t):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"non-finite {what} at q={np.asarray(q).tolist()}, t={t}", q, t)
    return arr


def partials_q(fun, q, t):
    """Stack of d fun / d q^s for s = 0..n-1, shape (n, *fun.shape)."""
    q = np.asarray(q, dtype=float)
    out = []
    for s in range(q.size):
        h = step(q[s])
        qp = q.copy()
        qm = q.copy()
        qp[s] += h
        qm[s] -= h
        fp = checked(fun(qp, t), "finite-difference sample", qp, t)
        fm = checked(fun(qm, t), "finite-difference sample", qm, t)
        out.append((fp - fm) / (2.0 * h))
    return np.array(out)


def partial_t(fun, q, t):
    h = step(t)
    fp = checked(fun(q, t + h), "finite-difference sample", q, t + h)
    fm = checked(fun(q, t - h), "finite-difference sample", q, t - h)
    return (fp - fm) / (2.0 * h)


def derivative(fun, x):
    """Derivative of a scalar-argument function."""
    h = step(x)
    return (np.asarray(fun(x + h), dtype=float) - np.asarray(fun(x - h), dtype=float)) / (2.0 * h)
