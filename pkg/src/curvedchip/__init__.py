"""Cutting force prediction with curved uncut chip thickness.

A compressed-plate finite element solve on the uncut chip area yields a
surrogate chip-flow field; its streamlines define curved chip segments whose
lengths are the local uncut chip thickness.  Colwell's equivalent-chord model
and Young's perpendicular-strip model are included as baselines.
"""
from .chipflow import (ChipDecomposition, ColwellModel, Streamline, YoungDecomposition,
                       colwell_model, curved_decomposition, trace_streamline, trace_streamlines,
                       young_decomposition)
from .errors import *  # noqa: F401,F403
from .force import (ComplianceModel, ForceResult, LinearMaterial, PowerLawMaterial, TiShearMaterial,
                    WeightProfile, aisi1045, al7075, characteristic, compensate_deflection,
                    integrate_forces, integrate_forces_colwell, model_error, ti6al4v)
from .geometry import (ProcessParams, ThreadingProfile, ToolGeometry, TriMesh, UncutChipRegion,
                       build_threading_region, build_turning_region, buttress_profile, max_feed,
                       rake_normal, rectangle_region, triangulate)
from .plate_fe import FlowField, element_stiffness, gradient_field, solve_plate
from .simulate import predict_region, predict_turning
from .transforms import LocalFrame, build_T40, local_frame, solve_local_angles, tilt_field

__version__ = "0.1.0"
