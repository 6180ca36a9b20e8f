"""Scenario documents: validation, model construction and the actions."""

from dataclasses import dataclass, field
from typing import Optional

import jsonschema
import numpy as np

from . import chaplygin, dynamics, frames, hamiltonize, models
from .expr import compile_expr
from .geometry import ConstraintSpec, Dimensions, contact_invariant
from .lagrangian import NaturalLagrangianSpec

__all__ = ["ScenarioError", "Result", "SCHEMA", "validate", "build_model", "run"]

ACTIONS = ["simulate", "simulate-multiplier", "reduce", "hamiltonize", "contact-test", "frame-check"]

_num = {"type": "number"}
_expr = {"type": ["string", "number"]}
_vec = {"type": "array", "items": _num}

SCHEMA = {
    "type": "object",
    "required": ["model", "action"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "action": {"enum": ACTIONS},
        "model": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["disc", "damped_oscillator", "pendulum", "custom", "random_abelian"]},
                "params": {"type": "object"},
            },
        },
        "initial_state": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"q": _vec, "v": _vec, "t": _num},
        },
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["RK45", "DOP853", "Radau", "LSODA", "RK4"]},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "fixed_step": {"type": "number", "exclusiveMinimum": 0},
                "dt_out": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "frame": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["rotation", "translation"]},
                "theta": _expr,
                "dtheta": _expr,
                "plane": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
                "shift": {"type": "array", "items": _expr},
                "dshift": {"type": "array", "items": _expr},
            },
        },
        "contact": {
            "type": "object",
            "required": ["a"],
            "additionalProperties": False,
            "properties": {
                "a": _expr,
                "b": _expr,
                "probes": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}},
                "random_probes": {"type": "integer", "minimum": 1},
            },
        },
        "hamiltonize": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"N0": {"type": "number", "exclusiveMinimum": 0}, "t0": _num, "tau0": _num},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"format": {"enum": ["csv", "json"]}},
        },
    },
}

DISC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "m": {"type": "number", "exclusiveMinimum": 0},
        "r": {"type": "number", "exclusiveMinimum": 0},
        "I": {"type": "number", "minimum": 0},
        "c": {"type": "number", "minimum": 0},
        "g": _num,
        "radius": {
            "type": "object",
            "required": ["R0"],
            "additionalProperties": False,
            "properties": {"R0": _num, "eps": _num, "T": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}

OSC_SCHEMA = {
    "type": "object",
    "required": ["omega", "B0"],
    "additionalProperties": False,
    "properties": {"omega": _num, "B0": {"type": "number", "minimum": 0}},
}

RANDOM_SCHEMA = {
    "type": "object",
    "required": ["m", "r"],
    "additionalProperties": False,
    "properties": {
        "m": {"type": "integer", "minimum": 1},
        "r": {"type": "integer", "minimum": 1},
        "affine": {"type": "boolean"},
        "time_dependent": {"type": "boolean"},
    },
}

CUSTOM_SCHEMA = {
    "type": "object",
    "required": ["coordinates", "base", "metric"],
    "additionalProperties": False,
    "properties": {
        "coordinates": {"type": "array", "items": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"}, "minItems": 1},
        "base": {"type": "integer", "minimum": 1},
        "metric": {"type": "array", "items": {"type": "array", "items": _expr}},
        "oneform": {"type": "array", "items": _expr},
        "potential": _expr,
        "constraint": {
            "type": "object",
            "required": ["coeff"],
            "additionalProperties": False,
            "properties": {
                "coeff": {"type": "array", "items": {"type": "array", "items": _expr}},
                "affine": {"type": "array", "items": _expr},
            },
        },
    },
}


DEFAULT_RADIUS = {"R0": 1.0, "eps": 0.2, "T": 2 * np.pi}


class ScenarioError(ValueError):
    """Invalid scenario; ``path`` locates the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class Result:
    """Time series columns (in output order), a summary record and plot hints."""

    columns: dict
    summary: dict
    plot: Optional[dict] = None
    extra: dict = field(default_factory=dict)


def _check(doc, schema, prefix):
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in [prefix, *e.absolute_path] if p != "")
        raise ScenarioError(e.message, path or "/")


def validate(doc):
    _check(doc, SCHEMA, "")
    params = doc["model"].get("params", {})
    sub = {
        "disc": DISC_SCHEMA,
        "pendulum": DISC_SCHEMA,
        "damped_oscillator": OSC_SCHEMA,
        "random_abelian": RANDOM_SCHEMA,
        "custom": CUSTOM_SCHEMA,
    }[doc["model"]["name"]]
    _check(params, sub, "model/params")
    return doc


def _disc_params(params):
    rad = params.get("radius", DEFAULT_RADIUS)
    if rad.get("eps", 0.0) == 0.0:
        profile = models.constant_radius(rad["R0"])
    else:
        profile = models.sinusoidal_radius(rad["R0"], rad["eps"], rad.get("T", 2 * np.pi))
    p = models.DiscParams(
        params.get("m", 1.0), params.get("r", 1.0), params.get("I", 1.0), params.get("c", 0.0), params.get("g", 9.81), profile
    )
    lo = rad["R0"] - abs(rad.get("eps", 0.0)) + p.r
    if not lo > 0:
        raise ScenarioError("R(t) + r must stay positive", "model/params/radius")
    return p


def _custom_system(params):
    names = params["coordinates"]
    n, m = len(names), params["base"]
    if m > n:
        raise ScenarioError("base exceeds the number of coordinates", "model/params/base")
    dims = Dimensions(m, n - m)
    variables = [f"q{i + 1}" for i in range(n)] + list(names) + ["t"]
    if len(set(variables)) != len(variables):
        raise ScenarioError("coordinate names collide with q1..qn or t", "model/params/coordinates")

    def grid(rows, shape, path):
        arr = np.asarray(rows, dtype=object)
        if arr.shape != shape:
            raise ScenarioError(f"expected shape {shape}, got {arr.shape}", path)
        funs = [compile_expr(x, variables) for x in arr.ravel()]

        def ev(q, t):
            args = list(q) * 2 + [t]
            return np.array([f(*args) for f in funs]).reshape(shape)

        return ev

    metric = grid(params["metric"], (n, n), "model/params/metric")
    oneform = grid(params["oneform"], (n,), "model/params/oneform") if "oneform" in params else None
    potential = None
    if "potential" in params:
        pf = compile_expr(params["potential"], variables)

        def potential(q, t):
            return pf(*(list(q) * 2 + [t]))

    lag = NaturalLagrangianSpec(dims, metric, oneform, potential)
    con_doc = params.get("constraint")
    if dims.r == 0:
        con = ConstraintSpec.null(dims)
    else:
        if con_doc is None:
            raise ScenarioError("a constraint is required when base < number of coordinates", "model/params/constraint")
        coeff = grid(con_doc["coeff"], (dims.r, m), "model/params/constraint/coeff")
        affine = grid(con_doc["affine"], (dims.r,), "model/params/constraint/affine") if "affine" in con_doc else None
        con = ConstraintSpec(dims, coeff, affine)
    return dynamics.NonholonomicSystem(lag, con, None, tuple(names))


def build_model(doc, seed=0):
    """``NonholonomicSystem`` or ``Reduced1D`` described by ``doc["model"]``."""
    name = doc["model"]["name"]
    params = doc["model"].get("params", {})
    if name == "disc":
        return models.make_disc_full(_disc_params(params))
    if name == "pendulum":
        return models.make_variable_pendulum(_disc_params(params))
    if name == "damped_oscillator":
        return models.make_damped_oscillator(params["omega"], params["B0"])
    if name == "random_abelian":
        rng = np.random.default_rng(seed)
        return models.random_abelian_system(
            rng, params["m"], params["r"], params.get("affine", True), params.get("time_dependent", True)
        )
    return _custom_system(params)


def _integrator(doc, overrides):
    opts = dict(doc.get("integrator", {}))
    opts.update({k: v for k, v in overrides.items() if v is not None})
    step = opts.get("fixed_step")
    method = opts.get("method", "RK45")
    if method == "RK4" and step is None:
        raise ScenarioError("RK4 needs fixed_step", "integrator/fixed_step")
    return dict(
        method="RK4" if step is not None else method,
        rtol=opts.get("rtol", 1e-10),
        atol=opts.get("atol", 1e-10),
        step=step,
        dt_out=opts.get("dt_out", 0.01),
    )


def _initial_state(doc, n, m):
    st = doc.get("initial_state", {})
    q = st.get("q", [0.0] * n)
    v = st.get("v", [0.0] * m)
    if len(q) != n:
        raise ScenarioError(f"expected {n} coordinates, got {len(q)}", "initial_state/q")
    if len(v) != m:
        raise ScenarioError(f"expected {m} base velocities, got {len(v)}", "initial_state/v")
    return dynamics.MechState(q, v, st.get("t", 0.0))


def _trajectory_columns(sys, traj):
    cols = {"t": traj.t}
    for k, name in enumerate(sys.names):
        cols[name] = traj.q[:, k]
    for k, name in enumerate(sys.names[: sys.dims.m]):
        cols[name + "dot"] = traj.v[:, k]
    for k in range(sys.dims.r):
        cols[f"residual_{k + 1}"] = traj.residual[:, k]
    cols["energy"] = traj.energy
    if traj.moving_energy is not None:
        cols["moving_energy"] = traj.moving_energy
    return cols


def _traj_summary(traj):
    out = {
        "samples": len(traj),
        "t_end": float(traj.t[-1]),
        "max_residual": float(np.max(np.abs(traj.residual))) if traj.residual.size else 0.0,
        "energy_initial": float(traj.energy[0]),
        "energy_final": float(traj.energy[-1]),
        "integrator": {k: v for k, v in traj.meta.items() if k != "nfev"},
    }
    if traj.moving_energy is not None:
        out["moving_energy_max_change"] = float(np.max(np.abs(traj.moving_energy - traj.moving_energy[0])))
    return out


def _require_system(obj, action):
    if not isinstance(obj, dynamics.NonholonomicSystem):
        raise ScenarioError(f"action {action!r} needs a full mechanical model", "model/name")
    return obj


def _simulate(doc, sys, opts, formulation):
    sys = _require_system(sys, doc["action"])
    s0 = _initial_state(doc, sys.dims.n, sys.dims.m)
    traj = dynamics.integrate(sys, s0, s0.t + doc.get("horizon", 10.0), formulation=formulation, **opts)
    summary = _traj_summary(traj)
    return Result(_trajectory_columns(sys, traj), summary, {"x": "t", "y": list(sys.names)})


def _reduce(doc, sys, opts):
    sys = _require_system(sys, "reduce")
    red = chaplygin.reduce_abelian(sys)
    s0 = _initial_state(doc, sys.dims.n, sys.dims.m)
    t_end = s0.t + doc.get("horizon", 10.0)
    lifted = chaplygin.reconstruct(red, s0, t_end, **opts)
    full = dynamics.integrate(sys, s0, t_end, **opts)
    y0, v0 = s0.q[: sys.dims.m], s0.v
    jk2, jk1, jk0 = red.JK_graded(y0, v0, s0.t)
    summary = _traj_summary(lifted)
    summary.update(
        {
            "base_dims": red.base_dims,
            "reduced_vs_full_max_deviation": float(np.max(np.abs(lifted.q - full.q))),
            "initial": {
                "K_red": red.K_red(y0, s0.t).tolist(),
                "L_red": red.L_red(y0, v0, s0.t),
                "F_red": red.F_red(y0, v0, s0.t).tolist(),
                "JK2": jk2.tolist(),
                "JK1": jk1.tolist(),
                "JK0": jk0.tolist(),
            },
        }
    )
    return Result(_trajectory_columns(sys, lifted), summary, {"x": "t", "y": list(sys.names)})


def _hamiltonize(doc, obj):
    name = doc["model"]["name"]
    if name == "disc":
        p = _disc_params(doc["model"].get("params", {}))
        r1 = models.make_disc_reduced(p)
    elif name in ("damped_oscillator", "pendulum"):
        r1 = obj
        p = None
    else:
        raise ScenarioError("hamiltonize supports disc (c = 0), pendulum and damped_oscillator", "model/name")
    hopts = doc.get("hamiltonize", {})
    st = doc.get("initial_state", {})
    q, v = st.get("q", [0.0]), st.get("v", [0.0])
    if len(q) not in (1, 2) or len(v) != 1:
        raise ScenarioError("hamiltonize needs one coordinate (a second, fiber, entry is ignored) and one velocity", "initial_state")
    t0 = hopts.get("t0", st.get("t", 0.0))
    horizon = doc.get("horizon", 10.0)
    N0 = hopts.get("N0")
    prof, rep = hamiltonize.hamiltonize(r1, (t0, t0 + horizon), t0, hopts.get("tau0", 0.0), N0)
    t, yA, yB = hamiltonize.equivalence_paths(r1, rep, q[0], v[0], horizon)
    tau = rep.u(t)
    summary = {
        "N0": prof.N0,
        "t_interval": list(rep.t_interval),
        "tau_interval": list(rep.tau_interval),
        "equivalence_max_deviation": float(np.max(np.abs(yA - yB))),
        "samples": len(t),
    }
    if r1.alpha is not None:
        summary["alpha"] = r1.alpha
    if name == "damped_oscillator":
        B0 = doc["model"]["params"]["B0"]
        summary["B0"] = B0
        if B0 > 0:
            tau0 = rep.tau0
            z_cf = t0 + np.log((B0 * (tau - tau0) + prof.N0) / prof.N0) / B0
            N_cf = B0 * (tau - tau0) + prof.N0
            summary["closed_form_max_deviation"] = float(
                max(np.max(np.abs(rep.z(tau) - z_cf)), np.max(np.abs(rep.N(tau) - N_cf)))
            )
    rad = doc["model"].get("params", {}).get("radius", DEFAULT_RADIUS)
    if p is not None and rad.get("eps", 0.0) != 0.0:
        summary["transformed_period"] = hamiltonize.transformed_period(p.a, rad.get("T", 2 * np.pi), p.alpha)
    cols = {"t": t, "tau": tau, "y_direct": yA, "y_transformed": yB, "N": rep.udot(t)}
    return Result(cols, summary, {"x": "t", "y": ["y_direct", "y_transformed"]})


def _contact(doc, tol, seed):
    c = doc.get("contact")
    if c is None:
        raise ScenarioError("contact-test needs a 'contact' section", "contact")
    fa = compile_expr(c["a"], ["x", "y", "t"])
    fb = compile_expr(c.get("b", 0.0), ["x", "y", "t"])
    probes = c.get("probes")
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = rng.uniform(-1, 1, (c.get("random_probes", 10), 3)).tolist()
    vals = np.array([contact_invariant(fa, fb, *pt) for pt in probes])
    thresh = tol if tol is not None else 1e-7
    verdict = "nonholonomic" if np.any(np.abs(vals) > thresh) else "holonomic"
    arr = np.asarray(probes, dtype=float)
    cols = {"x": arr[:, 0], "y": arr[:, 1], "t": arr[:, 2], "invariant": vals}
    summary = {"verdict": verdict, "threshold": thresh, "probes": len(vals), "max_abs_invariant": float(np.max(np.abs(vals)))}
    return Result(cols, summary, None)


def _frame(doc, n):
    fd = doc.get("frame")
    if fd is None:
        raise ScenarioError("frame-check needs a 'frame' section", "frame")
    if fd["type"] == "rotation":
        th = compile_expr(fd.get("theta", "t"), ["t"])
        dth = compile_expr(fd.get("dtheta", 1.0), ["t"])
        plane = tuple(fd.get("plane", [0, 1]))
        if max(plane) >= n or plane[0] == plane[1]:
            raise ScenarioError(f"plane must name two distinct coordinates below {n}", "frame/plane")
        return frames.rotation_frame(th, dth, n, plane)
    shift = [compile_expr(e, ["t"]) for e in fd.get("shift", [])]
    dshift = [compile_expr(e, ["t"]) for e in fd.get("dshift", [])]
    if len(shift) != n or len(dshift) != n:
        raise ScenarioError(f"shift and dshift need {n} entries", "frame")
    return frames.translation_frame(
        lambda t: np.array([f(t) for f in shift]), lambda t: np.array([f(t) for f in dshift])
    )


def _frame_check(doc, sys, opts):
    sys = _require_system(sys, "frame-check")
    f = _frame(doc, sys.dims.n)
    moved = frames.transform_system(sys, f)
    s0 = _initial_state(doc, sys.dims.n, sys.dims.m)
    t_end = s0.t + doc.get("horizon", 10.0)

    def omega(q, t):
        return f.time_derivative(f.inverse(q, t), t)

    fixed = dynamics.integrate(sys, s0, t_end, moving_field=omega, **opts)
    x0, xd0 = frames.inverse_transform_velocity(f, s0.q, fixed.qdot[0], s0.t)
    mov = dynamics.integrate(moved, dynamics.MechState(x0, xd0[: sys.dims.m], s0.t), t_end, **opts)
    mapped = np.array([f.map(x, t) for x, t in zip(mov.q, mov.t)])
    rel = 0.0
    for x, xd, t in zip(mov.q, mov.qdot, mov.t):
        q = f.map(x, t)
        qd = frames.transform_velocity(f, x, xd, t)
        _, Om = frames.omega_fields(f, x, t)
        lhs = sys.energy(q, qd, t)
        rhs = moved.energy(x, xd, t) + moved.momentum(x, xd, t) @ Om
        rel = max(rel, abs(lhs - rhs))
    x_probe = mov.q[0]
    summary = _traj_summary(fixed)
    summary.update(
        {
            "equivariance_max_deviation": float(np.max(np.abs(mapped - fixed.q))),
            "energy_relation_max_error": float(rel),
            "moving_affine_term_initial": moved.constraint.a0(x_probe, s0.t).tolist(),
        }
    )
    return Result(_trajectory_columns(sys, fixed), summary, {"x": "t", "y": list(sys.names)})


def run(doc, *, tol=None, fixed_step=None, seed=0) -> Result:
    """Validate and execute one scenario document."""
    validate(doc)
    action = doc["action"]
    if action == "contact-test":
        return _contact(doc, tol, seed)
    if doc["model"]["name"] == "disc" and doc["model"].get("params", {}).get("I", 1.0) == 0:
        raise ScenarioError("the full disc needs I > 0; use the pendulum model", "model/params/I")
    obj = build_model(doc, seed)
    opts = _integrator(doc, {"atol": tol, "fixed_step": fixed_step})
    if action == "simulate":
        return _simulate(doc, obj, opts, "voronec")
    if action == "simulate-multiplier":
        return _simulate(doc, obj, opts, "multiplier")
    if action == "reduce":
        return _reduce(doc, obj, opts)
    if action == "hamiltonize":
        return _hamiltonize(doc, obj)
    return _frame_check(doc, obj, opts)
