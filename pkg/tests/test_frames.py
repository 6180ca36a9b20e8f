import numpy as np
import pytest

from nonholo.dynamics import MechState, integrate
from nonholo.frames import (
    SingularFrameError,
    affine_frame,
    identity_frame,
    inverse_transform_velocity,
    moving_energy,
    omega_fields,
    rotation_frame,
    transform_system,
    transform_velocity,
    translation_frame,
)
from nonholo.lagrangian import energy, lagrangian_value
from nonholo.models import DiscParams, make_disc_full, random_abelian_system, sinusoidal_radius
from oracles import knife_edge, sliding_particle


def random_frame(rng, n):
    A0 = np.eye(n) + 0.2 * rng.normal(size=(n, n))
    A1 = 0.1 * rng.normal(size=(n, n))
    b0, b1 = rng.normal(size=n), rng.normal(size=n)
    w = rng.uniform(0.5, 1.5)
    return affine_frame(
        lambda t: A0 + A1 * np.sin(w * t),
        lambda t: A1 * w * np.cos(w * t),
        lambda t: b0 + b1 * np.cos(w * t),
        lambda t: -b1 * w * np.sin(w * t),
    )


def pulled_back_trajectory_deviation(sys, f, s0, t_end):
    fixed = integrate(sys, s0, t_end, rtol=1e-11, atol=1e-11)
    moved = transform_system(sys, f)
    x0, xd0 = inverse_transform_velocity(f, s0.q, fixed.qdot[0], s0.t)
    mov = integrate(moved, MechState(x0, xd0[: sys.dims.m], s0.t), t_end, rtol=1e-11, atol=1e-11)
    mapped = np.array([f.map(x, t) for x, t in zip(mov.q, mov.t)])
    return float(np.max(np.abs(mapped - fixed.q)))


def test_identity_frame_has_no_velocity():
    f = identity_frame(3)
    w, W = omega_fields(f, np.ones(3), 0.7)
    assert not w.any() and not W.any()
    assert np.array_equal(transform_velocity(f, np.ones(3), [1.0, 2.0, 3.0], 0.0), [1.0, 2.0, 3.0])


def test_identity_frame_leaves_system_unchanged(rng):
    sys = random_abelian_system(rng, 2, 1)
    moved = transform_system(sys, identity_frame(3))
    q, t = rng.uniform(-1, 1, 3), 0.3
    L, l = sys.lagrangian, moved.lagrangian
    assert np.allclose(L.K(q, t), l.K(q, t)) and np.allclose(L.D(q, t), l.D(q, t))
    assert L.V(q, t) == pytest.approx(l.V(q, t))
    assert np.allclose(sys.constraint.a(q, t), moved.constraint.a(q, t))
    assert np.allclose(sys.constraint.a0(q, t), moved.constraint.a0(q, t))


def test_rotation_frame_velocity_is_planar_angular_velocity():
    f = rotation_frame(lambda t: 0.3 * t**2, lambda t: 0.6 * t)
    x, t = np.array([0.4, -1.2]), 1.5
    q = f.map(x, t)
    w, _ = omega_fields(f, x, t)
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(w, 0.6 * t * J @ q)
    assert np.allclose(transform_velocity(f, x, [0.0, 0.0], t), 0.6 * t * J @ q)


def test_random_frame_adjoint_relation_and_inverse(rng):
    f = random_frame(rng, 3)
    for _ in range(50):
        x, t = rng.normal(size=3), rng.uniform(0, 5)
        w, W = omega_fields(f, x, t)
        assert np.allclose(f.jacobian(x, t) @ W, w, atol=1e-8)
        assert np.allclose(f.inverse(f.map(x, t), t), x, atol=1e-9)


def test_velocity_round_trip(rng):
    f = random_frame(rng, 3)
    for _ in range(100):
        x, xd, t = rng.normal(size=3), rng.normal(size=3), rng.uniform(0, 5)
        qd = transform_velocity(f, x, xd, t)
        x2, xd2 = inverse_transform_velocity(f, f.map(x, t), qd, t)
        assert np.allclose(x2, x, atol=1e-9) and np.allclose(xd2, xd, atol=1e-9)


def test_inverted_frame_undoes_the_frame(rng):
    f = random_frame(rng, 2)
    g = f.inverted()
    x, xd, t = rng.normal(size=2), rng.normal(size=2), 1.3
    q = f.map(x, t)
    qd = transform_velocity(f, x, xd, t)
    assert np.allclose(g.map(q, t), x)
    assert np.allclose(transform_velocity(g, q, qd, t), xd)


def test_transformed_lagrangian_is_composition(rng):
    sys = random_abelian_system(rng, 2, 1)
    f = random_frame(rng, 3)
    moved = transform_system(sys, f)
    for _ in range(20):
        x, xd, t = rng.normal(size=3), rng.normal(size=3), rng.uniform(0, 3)
        q, qd = f.map(x, t), transform_velocity(f, x, xd, t)
        assert lagrangian_value(moved.lagrangian, x, xd, t) == pytest.approx(lagrangian_value(sys.lagrangian, q, qd, t), abs=1e-10)


def test_rotation_frame_kinetic_data_closed_forms(rng):
    sys = random_abelian_system(rng, 1, 1, oneform=False)
    f = rotation_frame(lambda t: 0.8 * t, lambda t: 0.8)
    moved = transform_system(sys, f)
    x, t = rng.normal(size=2), 0.9
    q, J = f.map(x, t), f.jacobian(x, t)
    K = sys.lagrangian.K(q, t)
    _, W = omega_fields(f, x, t)
    kappa = moved.lagrangian.K(x, t)
    assert np.allclose(kappa, J.T @ K @ J)
    assert np.allclose(moved.lagrangian.D(x, t), kappa @ W)
    assert moved.lagrangian.V(x, t) == pytest.approx(sys.lagrangian.V(q, t) - 0.5 * W @ kappa @ W)


def test_moved_trajectories_satisfy_pulled_back_constraint(rng):
    sys = random_abelian_system(rng, 2, 1)
    f = random_frame(rng, 3)
    moved = transform_system(sys, f)
    x, xd_b, t = rng.normal(size=3), rng.normal(size=2), 0.4
    xd = moved.full_velocity(x, xd_b, t)
    qd = transform_velocity(f, x, xd, t)
    q = f.map(x, t)
    assert np.allclose(sys.full_velocity(q, qd[:2], t), qd, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_equivariance_random_frames(seed):
    rng = np.random.default_rng(100 + seed)
    sys = random_abelian_system(rng, 2, 1)
    f = random_frame(rng, 3)
    s0 = MechState(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 2), 0.0)
    assert pulled_back_trajectory_deviation(sys, f, s0, 5.0) <= 1e-6


def test_equivariance_disc():
    sys = make_disc_full(DiscParams(c=0.2, radius=sinusoidal_radius(1.0, 0.2, 2 * np.pi)))
    f = rotation_frame(lambda t: 0.3 * np.sin(t), lambda t: 0.3 * np.cos(t))
    assert pulled_back_trajectory_deviation(sys, f, MechState([0.3, 0.1], [0.5], 0.0), 5.0) <= 1e-6


def test_energy_relation(rng):
    sys = random_abelian_system(rng, 2, 1)
    f = random_frame(rng, 3)
    moved = transform_system(sys, f)
    for _ in range(100):
        x, xd, t = rng.normal(size=3), rng.normal(size=3), rng.uniform(0, 5)
        q, qd = f.map(x, t), transform_velocity(f, x, xd, t)
        _, W = omega_fields(f, x, t)
        lhs = energy(sys.lagrangian, q, qd, t)
        rhs = moved.energy(x, xd, t) + moved.momentum(x, xd, t) @ W
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_moving_energy_without_field_is_energy(rng):
    sys = random_abelian_system(rng, 1, 1)
    q, qd = rng.normal(size=2), rng.normal(size=2)
    zero = lambda q, t: np.zeros(2)  # noqa: E731
    assert moving_energy(sys.lagrangian, zero, q, qd, 0.5) == energy(sys.lagrangian, q, qd, 0.5)


def test_distinguished_frame_conserves_moving_energy():
    v0 = 0.7
    sys = sliding_particle(v0)
    f = translation_frame(lambda t: np.array([v0 * t, 0.0]), lambda t: np.array([v0, 0.0]))
    moved = transform_system(sys, f)
    x = np.array([0.2, 0.4])
    assert np.allclose(moved.constraint.a0(x, 3.0), 0.0, atol=1e-14)

    xi = lambda q, t: np.array([v0, 0.0])  # noqa: E731
    traj = integrate(sys, MechState([0.0, 0.4], [1.5], 0.0), 10.0, moving_field=xi, rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(traj.moving_energy - traj.moving_energy[0])) <= 1e-7
    assert np.ptp(traj.energy) > 1e-2
    J = [moving_energy(sys.lagrangian, xi, q, qd, t) for q, qd, t in zip(traj.q, traj.qdot, traj.t)]
    assert np.allclose(J, traj.moving_energy)


def test_homogeneous_constraint_becomes_affine_in_rotating_frame():
    sys = knife_edge()
    assert sys.constraint.homogeneous
    moved = transform_system(sys, rotation_frame(lambda t: 0.5 * t, lambda t: 0.5, n=3))
    assert abs(moved.constraint.a0(np.array([0.4, 0.7, 0.0]), 1.0)[0]) > 1e-3


def test_singular_frame_raises():
    f = affine_frame(lambda t: np.diag([1.0, 0.0]), lambda t: np.eye(2), lambda t: np.zeros(2), lambda t: np.zeros(2))
    with pytest.raises(SingularFrameError):
        omega_fields(f, np.ones(2), 0.0)


def test_frame_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        transform_system(random_abelian_system(rng, 1, 1), identity_frame(3))
