"""Chip segmentation: curved streamlines of the flow field plus the two straight-chip baselines.

Three decompositions of an uncut chip region share the :class:`ChipDecomposition`
container consumed by :mod:`curvedchip.force`:

* curved -- one streamline per mesh element, traced through the element
  centroid from the cutting edge to a free boundary;
* Colwell -- a single equivalent chip perpendicular to the chord of the
  engaged edge;
* Young -- straight strips perpendicular to the local cutting edge, chopped
  where they run into an earlier strip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from matplotlib.tri import Triangulation

from .errors import TraceStalled
from .geometry import CUTTING_EDGE, FREE, TriMesh, UncutChipRegion, _shoelace
from .plate_fe import FlowField
from .transforms import local_frames, tilted_inplane

STALL_FACTOR = 10
WALK_STEPS = 6
_FLAT = np.array([0.0, 1.0, 0.0])


class FieldInterpolator:
    """Point location and barycentric interpolation of a :class:`FlowField`.

    Parameters
    ----------
    field : FlowField
        Nodal unit vectors on a triangular mesh.
    rake_normal : array_like, optional
        When given, :meth:`velocity` returns the tilted direction (the
        in-plane part of ``T40 @ e_z``) instead of ``g`` itself.
    """

    def __init__(self, field: FlowField, rake_normal=None):
        self.field = field
        mesh = field.mesh
        self._tri = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)
        self._finder = self._tri.get_trifinder()
        # neighbour across the side opposite local vertex k
        self._across = self._tri.neighbors[:, [1, 2, 0]]
        v = mesh.nodes[mesh.triangles]
        self._origin = v[:, 0].copy()
        inv = np.linalg.inv(np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2))
        self._inv = inv
        # origin and inverse edge matrix packed per triangle: one gather per lookup
        self._affine = np.column_stack([self._origin, inv.reshape(-1, 4)])
        self._g_tri = field.g[mesh.triangles]
        n = _FLAT if rake_normal is None else np.asarray(rake_normal, float)
        self._normal = None if np.allclose(n, _FLAT, atol=1e-15) else n

    def _walk(self, p, hint):
        """Triangle per point and its barycentric coordinates (NaN rows outside)."""
        tri = np.asarray(hint, dtype=np.int64).copy()
        known = tri >= 0
        lam = np.full((len(p), 3), np.nan)
        if known.all():
            lam = self.barycentric(p, tri)
            bad = lam.min(axis=1) < 0
            if not bad.any():
                return tri, lam
            todo = np.flatnonzero(bad)
        else:
            todo = np.flatnonzero(known)
        for _ in range(WALK_STEPS):
            if len(todo) == 0:
                break
            l = self.barycentric(p[todo], tri[todo])
            k = l.argmin(axis=1)
            out = l[np.arange(len(todo)), k] < 0
            lam[todo[~out]] = l[~out]
            todo, k = todo[out], k[out]
            lam[todo] = np.nan
            tri[todo] = self._across[tri[todo], k]
            todo = todo[tri[todo] >= 0]
        miss = tri < 0
        miss[todo] = True
        if miss.any():
            tri[miss] = self._finder(p[miss, 0], p[miss, 1])
            lam[miss] = np.nan
            found = np.flatnonzero(miss & (tri >= 0))
            if len(found):
                lam[found] = self.barycentric(p[found], tri[found])
        return tri, lam

    def locate(self, points: np.ndarray, hint: np.ndarray | None = None) -> np.ndarray:
        """Containing triangle index per point, -1 outside.

        With ``hint`` (a nearby triangle per point) a short walk over
        neighbouring triangles is tried first; points it cannot settle go to
        the trifinder.
        """
        p = np.atleast_2d(points)
        if hint is None:
            return np.asarray(self._finder(p[:, 0], p[:, 1]), dtype=np.int64)
        return self._walk(p, hint)[0]

    def barycentric(self, points: np.ndarray, tri: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        a = self._affine[tri]
        dx, dz = p[:, 0] - a[:, 0], p[:, 1] - a[:, 1]
        out = np.empty((len(p), 3))
        out[:, 1] = a[:, 2] * dx + a[:, 3] * dz
        out[:, 2] = a[:, 4] * dx + a[:, 5] * dz
        out[:, 0] = 1.0 - out[:, 1] - out[:, 2]
        return out

    def direction(self, points: np.ndarray, hint: np.ndarray | None = None) -> np.ndarray:
        """Renormalized barycentric average of ``g``; NaN rows outside the mesh."""
        return self._direction(points, hint)[0]

    def _direction(self, points, hint=None):
        p = np.atleast_2d(np.asarray(points, float))
        if hint is None:
            hint = np.full(len(p), -1)
        tri, lam = self._walk(p, hint)
        inside = tri >= 0
        gt = self._g_tri[np.where(inside, tri, 0)]
        g = lam[:, 0, None] * gt[:, 0] + lam[:, 1, None] * gt[:, 1] + lam[:, 2, None] * gt[:, 2]
        nrm = np.sqrt(g[:, 0] ** 2 + g[:, 1] ** 2)
        g /= np.where(nrm > 0, nrm, 1.0)[:, None]
        return g, tri

    def velocity(self, points: np.ndarray, hint: np.ndarray | None = None) -> np.ndarray:
        return self._velocity(points, hint)[0]

    def _velocity(self, points, hint=None):
        g, tri = self._direction(points, hint)
        if self._normal is None:
            return g, tri
        ok = tri >= 0
        if ok.any():
            v = tilted_inplane(g[ok], self._normal)
            g[ok] = v / np.linalg.norm(v, axis=1)[:, None]
        return g, tri


@dataclass(frozen=True, eq=False)
class Streamline:
    """Chip segment from the cutting edge to a free boundary.

    ``arc_length`` is the curved uncut chip thickness of the seed it was
    traced through.
    """

    points: np.ndarray
    arc_length: float
    start_label: str
    end_label: str

    @property
    def chord(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))


def _first_crossing(p, q, seg, labels):
    """Earliest crossing of each step ``p[i] -> q[i]`` with the boundary segments.

    Returns the crossing point and label; rows with no crossing keep ``p``
    and take the label of the nearest segment.
    """
    a, b = seg[:, 0], seg[:, 1]
    d = q - p
    e = b - a
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    ap = a[None] - p[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ap[..., 0] * e[None, :, 1] - ap[..., 1] * e[None, :, 0]) / denom
        u = (ap[..., 0] * d[:, None, 1] - ap[..., 1] * d[:, None, 0]) / denom
    tol = 1e-9
    ok = (np.abs(denom) > 1e-300) & (t >= -tol) & (t <= 1 + tol) & (u >= -tol) & (u <= 1 + tol)
    t = np.where(ok, t, np.inf)
    j = np.argmin(t, axis=1)
    tj = t[np.arange(len(p)), j]
    hit = np.isfinite(tj)
    out = p.copy()
    out[hit] = p[hit] + np.clip(tj[hit], 0.0, 1.0)[:, None] * d[hit]
    lab = np.empty(len(p), dtype=object)
    lab[hit] = labels[j[hit]]
    if (~hit).any():
        lab[~hit] = labels[_nearest_segment(p[~hit], seg)]
    return out, lab


def _nearest_segment(p, seg):
    a, b = seg[:, 0][None], seg[:, 1][None]
    e = b - a
    t = np.clip(np.einsum("mkj,mkj->mk", p[:, None] - a, e) / np.einsum("mkj,mkj->mk", e, e), 0, 1)
    d = np.linalg.norm(p[:, None] - (a + t[..., None] * e), axis=2)
    return np.argmin(d, axis=1)


def _integrate(interp: FieldInterpolator, seeds: np.ndarray, step: float, sign: float,
               seg: np.ndarray, labels: np.ndarray, max_steps: int, keep_paths: bool):
    """March all seeds along ``sign * velocity`` until each leaves the mesh."""
    pos = np.array(seeds, float)
    m = len(pos)
    length = np.zeros(m)
    end_label = np.empty(m, dtype=object)
    active = np.ones(m, bool)
    where = interp.locate(pos)
    history = [(np.arange(m), pos.copy())] if keep_paths else None

    def vel(p, hint):
        v, tri = interp._velocity(p, hint)
        return sign * v, tri

    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        p = pos[idx]
        k1, t1 = vel(p, where[idx])
        lost = t1 < 0
        if lost.any():
            # seed sits on (or a rounding error outside) the boundary
            q, lab = _first_crossing(p[lost], p[lost], seg, labels)
            end_label[idx[lost]] = lab
            active[idx[lost]] = False
            idx, p, k1, t1 = idx[~lost], p[~lost], k1[~lost], t1[~lost]
            if len(idx) == 0:
                continue
        k2, _ = vel(p + 0.5 * step * k1, t1)
        k3, _ = vel(p + 0.5 * step * k2, t1)
        k4, _ = vel(p + step * k3, t1)
        rk = (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        euler = np.isnan(rk[:, 0])
        rk[euler] = k1[euler]
        q = p + step * rk
        tq = interp.locate(q, t1)
        out = tq < 0
        if out.any():
            q[out], lab = _first_crossing(p[out], q[out], seg, labels)
            end_label[idx[out]] = lab
            active[idx[out]] = False
        length[idx] += np.linalg.norm(q - p, axis=1)
        pos[idx] = q
        where[idx] = tq
        if keep_paths:
            history.append((idx, q.copy()))
    else:
        if active.any():
            bad = int(np.flatnonzero(active)[0])
            raise TraceStalled(f"seed #{bad} at {tuple(np.round(seeds[bad], 6))} did not reach a boundary "
                               f"within {max_steps} steps")
    paths = None
    if keep_paths:
        paths = [[] for _ in range(m)]
        for ids, pts in history:
            for i, pt in zip(ids, pts):
                paths[i].append(pt)
        paths = [np.array(pl) for pl in paths]
    return length, end_label, pos, paths


class StreamlineTracer:
    """Fixed-step fourth order Runge-Kutta tracer over a flow field.

    The step defaults to a quarter of the mesh target size.  Near the
    boundary, where intermediate stages fall outside the mesh, the step
    degrades to explicit Euler and the final segment is clipped exactly at
    the boundary.
    """

    def __init__(self, field: FlowField, rake_normal=None, step: float | None = None):
        self.field = field
        self.mesh = field.mesh
        self.interp = FieldInterpolator(field, rake_normal)
        region = self.mesh.region
        self.step = step or self.mesh.target_edge_length / 4.0
        self._seg = region.segments()
        self._labels = np.asarray(region.labels, dtype=object)
        self.max_steps = int(math.ceil(STALL_FACTOR * region.diameter / self.step))

    def _run(self, seeds, sign, keep_paths):
        return _integrate(self.interp, np.atleast_2d(seeds), self.step, sign, self._seg,
                          self._labels, self.max_steps, keep_paths)

    def thickness(self, seeds: np.ndarray) -> np.ndarray:
        """Edge-to-free-boundary arc length through every seed."""
        fwd, *_ = self._run(seeds, 1.0, False)
        back, *_ = self._run(seeds, -1.0, False)
        return fwd + back

    def trace(self, seeds: np.ndarray) -> list[Streamline]:
        fl, flab, _, fpath = self._run(seeds, 1.0, True)
        bl, blab, _, bpath = self._run(seeds, -1.0, True)
        out = []
        for i in range(len(fl)):
            pts = np.vstack([bpath[i][::-1], fpath[i][1:]])
            out.append(Streamline(pts, float(fl[i] + bl[i]), blab[i], flab[i]))
        return out


def trace_streamline(field: FlowField, seed, mesh: TriMesh | None = None,
                     rake_normal=None, step: float | None = None) -> Streamline:
    """Trace the chip segment through a single ``seed``.  ``mesh`` defaults to ``field.mesh``."""
    if mesh is not None and mesh is not field.mesh:
        raise ValueError("field was not computed on this mesh")
    return StreamlineTracer(field, rake_normal, step).trace(np.asarray(seed, float)[None])[0]


def trace_streamlines(field: FlowField, seeds, rake_normal=None,
                      step: float | None = None) -> list[Streamline]:
    return StreamlineTracer(field, rake_normal, step).trace(np.asarray(seeds, float))


@dataclass(frozen=True, eq=False)
class ChipDecomposition:
    """Elementary chips and edge pieces of one model, ready for force integration.

    Area terms carry ``h``, ``dA`` and their local angles and frames; edge terms
    carry ``dL`` and a frame.  Angles are kept so that thickness laws that
    depend on the local rake can be evaluated per element.
    """

    model: str
    h: np.ndarray
    dA: np.ndarray
    alpha_n: np.ndarray
    lambda_s: np.ndarray
    T40: np.ndarray
    dL: np.ndarray
    T40_edge: np.ndarray
    area: float = math.nan
    edge_length: float = math.nan
    extra: dict = dc_field(default_factory=dict)

    @property
    def n_elements(self) -> int:
        return len(self.h)

    @property
    def n_edges(self) -> int:
        return len(self.dL)

    @classmethod
    def empty(cls, model: str = "empty") -> "ChipDecomposition":
        z = np.zeros(0)
        t = np.zeros((0, 3, 3))
        return cls(model, z, z, z, z, t, z, t, 0.0, 0.0)


def _frames(rake_normal, directions):
    d = np.atleast_2d(np.asarray(directions, float))
    if len(d) == 0:
        z = np.zeros(0)
        return z, z, np.zeros((0, 3, 3))
    _, alpha, lam, T = local_frames(rake_normal, d)
    return alpha, lam, T


def curved_decomposition(mesh: TriMesh, field: FlowField, tool=None, rake_normal=None,
                         step: float | None = None, keep_streamlines: bool = False) -> ChipDecomposition:
    """Curved chip decomposition: one streamline per element centroid.

    Parameters
    ----------
    mesh, field
        Triangulated region and its flow field.
    tool : ToolGeometry, optional
        Supplies the rake normal; ``rake_normal`` may be passed directly instead.
        Without either the tool is treated as flat and orthogonal.
    step : float, optional
        Integration step, default ``target_edge_length / 4``.
    keep_streamlines : bool
        Store the traced polylines under ``extra["streamlines"]``.
    """
    if field.mesh is not mesh:
        raise ValueError("field was not computed on this mesh")
    n = rake_normal if rake_normal is not None else (tool.rake_normal if tool is not None else _FLAT)
    n = np.asarray(n, float)
    tracer = StreamlineTracer(field, n, step)
    seeds = mesh.element_centroids
    extra = {"seeds": seeds}
    try:
        if keep_streamlines:
            lines = tracer.trace(seeds)
            h = np.array([s.arc_length for s in lines])
            extra["streamlines"] = lines
        else:
            h = tracer.thickness(seeds)
    except TraceStalled as exc:
        raise TraceStalled(f"element trace failed: {exc}") from exc
    g_c = tracer.interp.direction(seeds)
    alpha, lam, T = _frames(n, g_c)

    edges, _ = mesh.cutting_edges()
    p = mesh.nodes[edges]
    dL = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    g_e = field.g[edges].sum(axis=1)
    g_e /= np.linalg.norm(g_e, axis=1)[:, None]
    _, _, T_e = _frames(n, g_e)
    return ChipDecomposition("curved", h, mesh.element_areas.copy(), alpha, lam, T, dL, T_e,
                             mesh.region.area, mesh.region.edge_length, extra)


# ---------------------------------------------------------------------------
# Colwell


@dataclass(frozen=True)
class ColwellModel:
    """Equivalent chord of the engaged edge and the chip flow perpendicular to it."""

    chord_start: np.ndarray
    chord_end: np.ndarray
    flow_direction: np.ndarray
    area: float
    edge_length: float

    @property
    def chord_length(self) -> float:
        return float(np.linalg.norm(self.chord_end - self.chord_start))

    @property
    def equivalent_thickness(self) -> float:
        return self.area / self.chord_length


def _inward_normals(polyline: np.ndarray) -> np.ndarray:
    # region boundaries are counter-clockwise in (x, z): the interior is on the left
    d = np.diff(polyline, axis=0)
    d /= np.linalg.norm(d, axis=1)[:, None]
    return np.column_stack([-d[:, 1], d[:, 0]])


def colwell_model(region: UncutChipRegion) -> ColwellModel:
    edge = region.cutting_edge
    a, b = edge[0], edge[-1]
    c = b - a
    c = c / np.linalg.norm(c)
    flow = np.array([-c[1], c[0]])
    seg_len = np.linalg.norm(np.diff(edge, axis=0), axis=1)
    mean_normal = (seg_len[:, None] * _inward_normals(edge)).sum(axis=0)
    if flow @ mean_normal < 0:
        flow = -flow
    return ColwellModel(a.copy(), b.copy(), flow, region.area, region.edge_length)


def colwell_decomposition(model: ColwellModel, tool=None, rake_normal=None) -> ChipDecomposition:
    """The Colwell chip as a single element plus a single edge piece sharing the chord frame."""
    n = rake_normal if rake_normal is not None else (tool.rake_normal if tool is not None else _FLAT)
    alpha, lam, T = _frames(n, model.flow_direction)
    return ChipDecomposition("colwell", np.array([model.equivalent_thickness]), np.array([model.area]),
                             alpha, lam, T, np.array([model.edge_length]), T.copy(),
                             model.area, model.edge_length, {"colwell": model})


# ---------------------------------------------------------------------------
# Young


@dataclass(frozen=True, eq=False)
class YoungDecomposition:
    """Straight strips perpendicular to the local cutting edge.

    ``areas`` are the mid-strip polygon areas rescaled so they sum to the
    region area; ``raw_area`` keeps the unscaled sum.
    """

    seeds: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray
    ends: np.ndarray
    chopped: np.ndarray
    areas: np.ndarray
    cell_lengths: np.ndarray
    raw_area: float
    region_area: float

    @property
    def n_segments(self) -> int:
        return len(self.seeds)


def _ray_hits(origin, direction, a, b, tmin):
    """Ray parameters where ``origin + t*direction`` crosses segments ``a->b`` (inf if none)."""
    e = b - a
    denom = direction[0] * e[:, 1] - direction[1] * e[:, 0]
    ap = a - origin
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ap[:, 0] * e[:, 1] - ap[:, 1] * e[:, 0]) / denom
        u = (ap[:, 0] * direction[1] - ap[:, 1] * direction[0]) / denom
    ok = (np.abs(denom) > 1e-300) & (t > tmin) & (u >= -1e-12) & (u <= 1 + 1e-12)
    return np.where(ok, t, np.inf)


def _point_at(edge, cum, s):
    k = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(edge) - 2))
    seg = cum[k + 1] - cum[k]
    t = (s - cum[k]) / seg if seg > 0 else 0.0
    return edge[k] + t * (edge[k + 1] - edge[k]), k


def _grow_strips(seeds, nu, full, tmin):
    """Grow all strips at unit speed and stop each where it meets an earlier passage.

    A crossing of strips ``i`` and ``j`` at distances ``t_i > t_j`` chops ``i``
    if ``j`` is still growing past that point.  Crossings are processed in
    order of arrival of the later strip, which makes the result independent
    of the seeding order.
    """
    m = len(seeds)
    i, j = np.triu_indices(m, 1)
    d_i, d_j = nu[i], nu[j]
    denom = d_i[:, 0] * d_j[:, 1] - d_i[:, 1] * d_j[:, 0]
    w = seeds[j] - seeds[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_i = (w[:, 0] * d_j[:, 1] - w[:, 1] * d_j[:, 0]) / denom
        t_j = (w[:, 0] * d_i[:, 1] - w[:, 1] * d_i[:, 0]) / denom
    ok = ((np.abs(denom) > 1e-12) & (t_i > tmin) & (t_j > tmin)
          & (t_i <= full[i]) & (t_j <= full[j]))
    i, j, t_i, t_j = i[ok], j[ok], t_i[ok], t_j[ok]
    late = np.where(t_i >= t_j, i, j)
    early = np.where(t_i >= t_j, j, i)
    t_late = np.maximum(t_i, t_j)
    t_early = np.minimum(t_i, t_j)
    length = full.copy()
    chopped = np.zeros(m, bool)
    for k in np.argsort(t_late, kind="stable"):
        a, b = late[k], early[k]
        if length[a] >= t_late[k] and length[b] >= t_early[k]:
            length[a] = t_late[k]
            chopped[a] = True
    return length, chopped


def young_decomposition(region: UncutChipRegion, n_segments: int = 64) -> YoungDecomposition:
    """Split the region into ``n_segments`` strips seeded uniformly along the engaged edge.

    Each strip runs along the inward edge normal until it meets the region
    boundary or a point another strip has already passed; in the latter case
    it is cut there and flagged as chopped.
    """
    if n_segments < 8:
        raise ValueError("n_segments must be at least 8")
    edge = region.cutting_edge
    normals = _inward_normals(edge)
    seg_len = np.linalg.norm(np.diff(edge, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    L = cum[-1]
    bseg = region.segments()
    tmin = 1e-9 * region.diameter

    sigma = (np.arange(n_segments) + 0.5) * L / n_segments
    seeds = np.empty((n_segments, 2))
    nu = np.empty((n_segments, 2))
    full = np.empty(n_segments)
    for i, s in enumerate(sigma):
        p, k = _point_at(edge, cum, s)
        seeds[i], nu[i] = p, normals[k]
        t = _ray_hits(p, nu[i], bseg[:, 0], bseg[:, 1], tmin).min()
        full[i] = t if np.isfinite(t) else 0.0
    lengths, chopped = _grow_strips(seeds, nu, full, tmin)
    ends = seeds + lengths[:, None] * nu

    # mid-strip polygons between neighbouring segments
    bounds = np.concatenate([[0.0], 0.5 * (sigma[:-1] + sigma[1:]), [L]])
    mids = np.empty((n_segments + 1, 2))
    mids[1:-1] = 0.5 * (ends[:-1] + ends[1:])
    mids[0] = ends[0] + (_point_at(edge, cum, 0.0)[0] - seeds[0])
    mids[-1] = ends[-1] + (_point_at(edge, cum, L)[0] - seeds[-1])
    raw = np.empty(n_segments)
    for i in range(n_segments):
        lo, hi = bounds[i], bounds[i + 1]
        inner = edge[(cum > lo) & (cum < hi)]
        poly = np.vstack([_point_at(edge, cum, lo)[0], inner, _point_at(edge, cum, hi)[0],
                          mids[i + 1], ends[i], mids[i]])
        raw[i] = abs(_shoelace(poly))
    raw_sum = float(raw.sum())
    areas = raw * (region.area / raw_sum) if raw_sum > 0 else np.full(n_segments, region.area / n_segments)
    return YoungDecomposition(seeds, nu, lengths, ends, chopped, areas, np.diff(bounds),
                              raw_sum, region.area)


def young_chip_decomposition(young: YoungDecomposition, tool=None, rake_normal=None) -> ChipDecomposition:
    """Force-ready form of a Young split: strip frames follow the local edge normal."""
    n = rake_normal if rake_normal is not None else (tool.rake_normal if tool is not None else _FLAT)
    keep = young.lengths > 0
    alpha, lam, T = _frames(n, young.normals)
    return ChipDecomposition("young", young.lengths[keep], young.areas[keep], alpha[keep], lam[keep],
                             T[keep], young.cell_lengths.copy(), T.copy(), young.region_area,
                             float(young.cell_lengths.sum()), {"young": young})


__all__ = [
    "CUTTING_EDGE", "FREE", "FieldInterpolator", "Streamline", "StreamlineTracer",
    "trace_streamline", "trace_streamlines", "ChipDecomposition", "curved_decomposition",
    "ColwellModel", "colwell_model", "colwell_decomposition",
    "YoungDecomposition", "young_decomposition", "young_chip_decomposition",
]
