import numpy as np
import pytest

from nonholo.chaplygin import NotChaplyginError, affine_horizontal_lift, reconstruct, reduce_abelian, sigma_tensor
from nonholo.dynamics import MechState, NonholonomicSystem, integrate
from nonholo.geometry import ConstraintSpec, Dimensions
from nonholo.lagrangian import NaturalLagrangianSpec, constrained_lagrangian
from nonholo.models import DiscParams, make_disc_full, make_disc_reduced, random_abelian_system, sinusoidal_radius
from oracles import bracket_curvature, knife_edge

DISC = DiscParams(1.0, 1.0, 1.0, 0.0, 9.81, sinusoidal_radius(1.0, 0.2, 2 * np.pi))


def test_disc_jk_is_linear_curvature_term(rng):
    red = reduce_abelian(make_disc_full(DISC))
    for _ in range(20):
        y, yd, t = rng.uniform(-3, 3, 1), rng.uniform(-2, 2, 1), rng.uniform(0, 10)
        jk2, jk1, jk0 = red.JK_graded(y, yd, t)
        assert jk2 == pytest.approx([0.0], abs=1e-12) and jk0 == pytest.approx([0.0], abs=1e-12)
        assert jk1[0] == pytest.approx(-DISC.I * DISC.a(t) * DISC.da(t) * yd[0], abs=1e-10)


def test_disc_sigma_vanishes(rng):
    sys = make_disc_full(DISC)
    for _ in range(10):
        xi = rng.normal(size=(3, 1))
        assert sigma_tensor(sys, [0.3], xi[0], xi[1], xi[2], rng.uniform(0, 5)) == 0.0


def test_reduced_lagrangian_is_constrained_lagrangian(rng):
    sys = random_abelian_system(rng, 2, 2)
    red = reduce_abelian(sys)
    for _ in range(10):
        y, yd, t = rng.normal(size=2), rng.normal(size=2), rng.uniform(0, 3)
        fiber = rng.normal(size=2)
        q = np.concatenate([y, fiber])
        assert red.L_red(y, yd, t) == pytest.approx(constrained_lagrangian(sys.lagrangian, sys.constraint, q, yd, t), abs=1e-12)


def test_stationary_homogeneous_constraints_have_no_constant_grade(rng):
    sys = random_abelian_system(rng, 2, 1, affine=False, time_dependent=False, oneform=False)
    red = reduce_abelian(sys)
    y, yd = rng.normal(size=2), rng.normal(size=2)
    jk2, jk1, jk0 = red.JK_graded(y, yd, 0.0)
    assert np.allclose(jk0, 0.0, atol=1e-12)
    assert np.allclose(jk1, 0.0, atol=1e-12)
    assert np.abs(jk2).max() > 1e-6


def test_grading_recovers_polynomial(rng):
    sys = random_abelian_system(rng, 2, 2)
    red = reduce_abelian(sys)
    y, yd, t = rng.normal(size=2), rng.normal(size=2), 0.7
    jk2, jk1, jk0 = red.JK_graded(y, yd, t)
    for s in (-1.5, 0.5, 3.0):
        assert np.allclose(red.JK(y, s * yd, t), jk0 + s * jk1 + s * s * jk2, atol=1e-10)
    # the quadratic grade is the Sigma tensor with the velocity twice
    expected = [sigma_tensor(sys, y, yd, yd, e, t) for e in np.eye(2)]
    assert np.allclose(jk2, expected, atol=1e-10)


def test_sigma_skew_in_last_two_arguments(rng):
    sys = random_abelian_system(rng, 2, 2)
    for _ in range(10):
        y, a, b, c = (rng.normal(size=2) for _ in range(4))
        t = rng.uniform(0, 2)
        assert sigma_tensor(sys, y, a, b, b, t) == pytest.approx(0.0, abs=1e-12)
        assert sigma_tensor(sys, y, a, b, c, t) == pytest.approx(-sigma_tensor(sys, y, a, c, b, t), abs=1e-12)


def test_sigma_matches_bracket_pairing(rng):
    sys = random_abelian_system(rng, 2, 2)
    for _ in range(5):
        y, a, b, c = (rng.normal(size=2) for _ in range(4))
        t = rng.uniform(0, 2)
        q = np.concatenate([y, np.zeros(2)])
        A_ij, _ = bracket_curvature(sys.constraint, q, t)
        lift = affine_horizontal_lift(sys, y, a, t) - affine_horizontal_lift(sys, y, np.zeros(2), t)
        pairing = (sys.lagrangian.K(q, t) @ lift)[2:] @ np.einsum("vij,i,j->v", A_ij, b, c)
        assert sigma_tensor(sys, y, a, b, c, t) == pytest.approx(pairing, abs=1e-8)


def test_affine_horizontal_lift():
    sys = make_disc_full(DISC)
    assert np.allclose(affine_horizontal_lift(sys, [0.2], [1.5], 0.4), [1.5, DISC.a(0.4) * 1.5])
    assert np.allclose(affine_horizontal_lift(sys, [0.2], [0.0], 0.4), [0.0, 0.0])


def test_lift_of_zero_is_affine_part(rng):
    sys = random_abelian_system(rng, 1, 2)
    q = np.concatenate([[0.3], np.zeros(2)])
    lift = affine_horizontal_lift(sys, [0.3], [0.0], 1.1)
    assert np.allclose(lift, np.concatenate([[0.0], sys.constraint.a0(q, 1.1)]))


@pytest.mark.parametrize("seed", range(3))
def test_reduced_trajectory_is_projection(seed):
    rng = np.random.default_rng(seed)
    sys = random_abelian_system(rng, 2, 2, damping=0.1)
    red = reduce_abelian(sys)
    s0 = MechState(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 2), 0.0)
    full = integrate(sys, s0, 5.0)
    base = integrate(red.as_system(), MechState(s0.q[:2], s0.v, 0.0), 5.0)
    assert np.max(np.abs(full.q[:, :2] - base.q)) <= 1e-6
    lifted = reconstruct(red, s0, 5.0)
    assert np.max(np.abs(full.q - lifted.q)) <= 1e-6


def test_reduced_force_projects_full_force(rng):
    sys = random_abelian_system(rng, 2, 1, damping=0.3)
    red = reduce_abelian(sys)
    y, yd = rng.normal(size=2), rng.normal(size=2)
    qd = affine_horizontal_lift(sys, y, yd, 0.2)
    q = np.concatenate([y, [0.0]])
    P = np.vstack([np.eye(2), sys.constraint.a(q, 0.2)])
    assert np.allclose(red.F_red(y, yd, 0.2), P.T @ sys.force(q, qd, 0.2))


def test_unbalanced_disc_is_not_chaplygin():
    with pytest.raises(NotChaplyginError) as info:
        reduce_abelian(make_disc_full(DiscParams(c=0.3)))
    assert info.value.coordinate == "psi"


def test_knife_edge_fails_probe_on_constraint():
    # coefficient y depends on the base, fine; add a fiber-dependent potential
    sys = knife_edge()
    L = sys.lagrangian
    bad = NaturalLagrangianSpec(L.dims, L.metric, potential=lambda q, t: q[2] ** 2)
    with pytest.raises(NotChaplyginError) as info:
        reduce_abelian(NonholonomicSystem(bad, sys.constraint, None, sys.names))
    assert info.value.coordinate == "z"
    assert reduce_abelian(sys).base_dims == 2


def test_disc_reduction_matches_hand_coefficients(rng):
    red = reduce_abelian(make_disc_full(DISC))
    hand = make_disc_reduced(DISC)
    for _ in range(100):
        y, yd, t = rng.uniform(-3, 3), rng.uniform(-2, 2), rng.uniform(0, 20)
        dK, K_t, dD, D_t, dV = red.partials([y], t)
        assert red.K_red([y], t)[0, 0] == pytest.approx(hand.K(t), abs=1e-10)
        assert K_t[0, 0] == pytest.approx(hand.dK(t), abs=1e-10)
        assert red.V_red([y], t) == pytest.approx(hand.V(y, t), abs=1e-10)
        assert dV[0] == pytest.approx(hand.dV_dy(y, t), abs=1e-10)
        assert -red.JK([y], [yd], t)[0] == pytest.approx(hand.B(t) * yd, abs=1e-10)


def test_non_natural_lagrangian_rejected():
    from nonholo.lagrangian import LagrangianFunction

    dims = Dimensions(1, 1)
    sys = NonholonomicSystem(LagrangianFunction(dims, lambda q, qd, t: 0.0), ConstraintSpec.null(dims))
    with pytest.raises(TypeError):
        reduce_abelian(sys)
