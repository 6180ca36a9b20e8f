"""Simulation and reduction of time-dependent nonholonomic mechanical systems."""

from .chaplygin import NotChaplyginError, ReducedSystem, affine_horizontal_lift, reduce_abelian, sigma_tensor
from .dynamics import MechState, NonholonomicSystem, Trajectory, integrate
from .frames import FrameMap, moving_energy, rotation_frame, transform_system, transform_velocity, translation_frame
from .geometry import ConstraintSpec, Dimensions, contact_invariant, curvature_coeffs, reconstruct_velocity
from .hamiltonize import (
    Reduced1D,
    build_reparametrization,
    hamiltonian_form,
    multiplier_profile,
    transformed_lagrangian,
    transformed_period,
    verify_equivalence,
)
from .lagrangian import ForceSpec, NaturalLagrangianSpec
from .models import DiscParams, make_damped_oscillator, make_disc_full, make_disc_reduced, sinusoidal_radius

__version__ = "0.1.0"

__all__ = [
    "NotChaplyginError",
    "ReducedSystem",
    "affine_horizontal_lift",
    "reduce_abelian",
    "sigma_tensor",
    "MechState",
    "NonholonomicSystem",
    "Trajectory",
    "integrate",
    "FrameMap",
    "moving_energy",
    "rotation_frame",
    "transform_system",
    "transform_velocity",
    "translation_frame",
    "ConstraintSpec",
    "Dimensions",
    "contact_invariant",
    "curvature_coeffs",
    "reconstruct_velocity",
    "Reduced1D",
    "build_reparametrization",
    "hamiltonian_form",
    "multiplier_profile",
    "transformed_lagrangian",
    "transformed_period",
    "verify_equivalence",
    "ForceSpec",
    "NaturalLagrangianSpec",
    "DiscParams",
    "make_damped_oscillator",
    "make_disc_full",
    "make_disc_reduced",
    "sinusoidal_radius",
]
