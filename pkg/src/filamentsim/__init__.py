"""Closed space curves evolved as zero sets of a complex level set function.

Curves live implicitly as the joint zero of the real and imaginary parts
of a node-sampled complex field; the field is built from the curve as
distance times a half-solid-angle phase, advected along a smooth
extension of the filament velocity, and re-extracted every step, so
topology changes need no surgery.
"""

from .config import Emitter, SimConfig, load_config, parse_config, serialize_config
from .curves import (
    CurveSet,
    curvature_vectors,
    distance_and_nearest,
    scene_preset,
    writhe,
)
from .dynamics import ExtensionParams, VelocityModel, curve_velocities, extend_velocity, velocity_field_rm
from .framing import conditioning_report, frame_and_twist
from .grid import ComplexField, GridSpec, NarrowBand, VectorField, build_narrow_band, trilinear_sample
from .levelset import advect_maccormack, bilinear_zero, extract_curves, face_incidence
from .sim import SimState, advect_markers, emit, init, init_from_config, run, step
from .solidangle import construct_psi, perturb_twist, signed_spherical_area, solid_angle, spherical_triangle_area

__all__ = [
    "Emitter",
    "SimConfig",
    "load_config",
    "parse_config",
    "serialize_config",
    "CurveSet",
    "curvature_vectors",
    "distance_and_nearest",
    "scene_preset",
    "writhe",
    "ExtensionParams",
    "VelocityModel",
    "curve_velocities",
    "extend_velocity",
    "velocity_field_rm",
    "conditioning_report",
    "frame_and_twist",
    "ComplexField",
    "GridSpec",
    "NarrowBand",
    "VectorField",
    "build_narrow_band",
    "trilinear_sample",
    "advect_maccormack",
    "bilinear_zero",
    "extract_curves",
    "face_incidence",
    "SimState",
    "advect_markers",
    "emit",
    "init",
    "init_from_config",
    "run",
    "step",
    "construct_psi",
    "perturb_twist",
    "signed_spherical_area",
    "solid_angle",
    "spherical_triangle_area",
]

__version__ = "0.1.0"
