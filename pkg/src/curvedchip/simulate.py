"""End-to-end force prediction for one cut: region, mesh, flow field, decomposition, force."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .chipflow import (ChipDecomposition, colwell_decomposition, colwell_model, curved_decomposition,
                       young_chip_decomposition, young_decomposition)
from .force import ForceResult, MaterialModel, integrate_forces
from .geometry import (ProcessParams, ToolGeometry, TriMesh, UncutChipRegion, build_turning_region,
                       triangulate)
from .plate_fe import FlowField, gradient_field, solve_plate

MODELS = ("curved", "colwell", "young")


def default_mesh_size(region: UncutChipRegion, r_eps: float = 0.0) -> float:
    """Target edge length: an eighth of the mean chip thickness, capped by the nose radius.

    The mean thickness is estimated as ``area / cutting edge length``.
    """
    thin = region.area / region.edge_length
    t = thin / 8.0
    t = min(t, region.diameter / 20.0)
    if r_eps > 0:
        t = min(t, r_eps / 2.0)
    return t


@dataclass
class Prediction:
    """Force of one model plus the intermediate artefacts that produced it."""

    model: str
    force: ForceResult
    region: UncutChipRegion
    decomposition: ChipDecomposition
    mesh: TriMesh | None = None
    field: FlowField | None = None
    extra: dict = dc_field(default_factory=dict)

    @property
    def F(self) -> np.ndarray:
        return self.force.F


def decompose(region: UncutChipRegion, model: str, rake_normal=None, mesh_size: float | None = None,
              poisson: float = 0.3, young_segments: int = 128, r_eps: float = 0.0,
              keep_streamlines: bool = False):
    """Build the chip decomposition of ``region`` for one model.

    Returns ``(decomposition, mesh, field)``; the last two are ``None``
    for the straight-chip models.
    """
    n = np.array([0.0, 1.0, 0.0]) if rake_normal is None else np.asarray(rake_normal, float)
    if model == "curved":
        t = mesh_size or default_mesh_size(region, r_eps)
        mesh = triangulate(region, t)
        fl = gradient_field(mesh, solve_plate(mesh, poisson=poisson))
        return curved_decomposition(mesh, fl, rake_normal=n, keep_streamlines=keep_streamlines), mesh, fl
    if model == "colwell":
        return colwell_decomposition(colwell_model(region), rake_normal=n), None, None
    if model == "young":
        return young_chip_decomposition(young_decomposition(region, young_segments), rake_normal=n), None, None
    raise ValueError(f"unknown model {model!r}; choose from {MODELS}")


def predict_region(region: UncutChipRegion, material: MaterialModel, model: str = "curved",
                   rake_normal=None, **kw) -> Prediction:
    decomp, mesh, fl = decompose(region, model, rake_normal, **kw)
    return Prediction(model, integrate_forces(decomp, material), region, decomp, mesh, fl)


def predict_turning(tool: ToolGeometry, process: ProcessParams, material: MaterialModel,
                    model: str = "curved", mesh_size: float | None = None, poisson: float = 0.3,
                    young_segments: int = 128, keep_streamlines: bool = False) -> Prediction:
    """Force on the tool for a turning pass, in N, machine frame."""
    region = build_turning_region(tool, process)
    return predict_region(region, material, model, tool.rake_normal, mesh_size=mesh_size,
                          poisson=poisson, young_segments=young_segments, r_eps=tool.r_eps,
                          keep_streamlines=keep_streamlines)


def turning_force_of_depth(tool: ToolGeometry, feed: float, material: MaterialModel,
                           model: str = "curved", **kw):
    """Closure ``a -> F`` for the deflection loop.

    When no mesh size is given it is frozen at the depth of the first call
    (the nominal one in :func:`compensate_deflection`).
    """
    cache: dict[float, np.ndarray] = {}

    def F(a: float) -> np.ndarray:
        key = round(a, 12)
        if key not in cache:
            process = ProcessParams(feed=feed, depth=a)
            if model == "curved" and not kw.get("mesh_size"):
                kw["mesh_size"] = default_mesh_size(build_turning_region(tool, process), tool.r_eps)
            cache[key] = predict_turning(tool, process, material, model, **kw).F
        return cache[key]

    return F


def equivalent_thickness(region: UncutChipRegion) -> float:
    return region.area / region.edge_length


def normalizing_force(material: MaterialModel, region_max: UncutChipRegion) -> float:
    """``K_uc * A_max``; ``K_uc`` is taken at the equivalent thickness of the largest chip."""
    h = equivalent_thickness(region_max)
    K_uc, _ = material.coefficients(np.array([h]))
    return float(K_uc[0]) * region_max.area
