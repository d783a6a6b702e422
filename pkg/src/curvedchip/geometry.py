"""Tool definitions, uncut chip regions and their triangulation.

All planar geometry lives in the reference plane with coordinates ``(x, z)``:
``x`` is the depth-of-cut direction and ``z`` the feed direction, lengths in
mm.  Point arrays have shape ``(n, 2)`` with columns ``(x, z)``.

The tool edge profile is the lower envelope of the insert in this plane, its
lowest point sits at the origin.  The uncut chip of the current pass lies
between the current edge and the edge of the previous pass, which is the
current edge shifted by ``+feed`` along ``z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon, box
from shapely.ops import substring, unary_union

from .errors import DegenerateRegion, FeedTooLarge, MeshFailure

CUTTING_EDGE = "cutting_edge"
FREE = "free"

MIN_AREA = 1e-9
NOSE_CHORD_ANGLE = math.radians(5.0)
ON_EDGE_TOL = 1e-9


def rake_normal(gamma_f: float, gamma_p: float) -> np.ndarray:
    """Unit normal of a flat rake face from its side and back rake angles.

    Parameters
    ----------
    gamma_f, gamma_p : float
        Side and back rake angles in radians, both below pi/2 in magnitude.

    Returns
    -------
    numpy.ndarray
        ``(n_x, n_y, n_z)`` in the machine frame, ``n_y > 0`` for small angles.
    """
    a = np.array([0.0, -math.sin(gamma_f), math.cos(gamma_f)])
    b = np.array([math.cos(gamma_p), -math.sin(gamma_p), 0.0])
    n = np.cross(a, b)
    return n / np.linalg.norm(n)


@dataclass(frozen=True)
class ToolGeometry:
    """Insert geometry; all angles in radians, nose radius in mm."""

    kappa_r: float
    epsilon: float
    r_eps: float = 0.0
    gamma_f: float = 0.0
    gamma_p: float = 0.0

    def __post_init__(self):
        if self.r_eps < 0:
            raise ValueError("nose radius must be non-negative")
        if not 0 < self.epsilon < math.pi:
            raise ValueError("nose angle must lie in (0, pi)")
        if not 0 < self.kappa_r < math.pi:
            raise ValueError("main cutting edge angle must lie in (0, pi)")
        if self.end_edge_angle < -1e-12:
            raise ValueError("kappa_r + epsilon must not exceed pi")
        if abs(self.gamma_f) >= math.pi / 2 or abs(self.gamma_p) >= math.pi / 2:
            raise ValueError("rake angles must be below pi/2 in magnitude")

    @classmethod
    def from_degrees(cls, kappa_r, epsilon, r_eps=0.0, gamma_f=0.0, gamma_p=0.0):
        return cls(math.radians(kappa_r), math.radians(epsilon), r_eps,
                   math.radians(gamma_f), math.radians(gamma_p))

    @property
    def end_edge_angle(self) -> float:
        """Angle of the secondary (end) cutting edge to the feed axis."""
        return math.pi - self.kappa_r - self.epsilon

    @property
    def rake_normal(self) -> np.ndarray:
        return rake_normal(self.gamma_f, self.gamma_p)


@dataclass(frozen=True)
class ProcessParams:
    """Feed per revolution and depth of cut in mm; speeds are optional.

    When any two of cutting speed (m/min), spindle speed (rpm) and workpiece
    radius (mm) are given the third is filled in from v_c = 2*pi*R*n/1000.
    """

    feed: float
    depth: float
    cutting_speed: float | None = None
    spindle_speed: float | None = None
    workpiece_radius: float | None = None

    def __post_init__(self):
        if self.feed <= 0:
            raise ValueError("feed must be positive")
        if self.depth <= 0:
            raise ValueError("depth of cut must be positive")
        vc, n, r = self.cutting_speed, self.spindle_speed, self.workpiece_radius
        known = sum(v is not None for v in (vc, n, r))
        if known == 2:
            # R in mm, v_c in m/min
            if vc is None:
                object.__setattr__(self, "cutting_speed", 2 * math.pi * r * n / 1000)
            elif n is None:
                object.__setattr__(self, "spindle_speed", vc * 1000 / (2 * math.pi * r))
            else:
                object.__setattr__(self, "workpiece_radius", vc * 1000 / (2 * math.pi * n))
        elif known == 3:
            expected = 2 * math.pi * r * n / 1000
            if not math.isclose(vc, expected, rel_tol=1e-6):
                raise ValueError(f"cutting speed {vc} inconsistent with 2*pi*R*n = {expected}")


# ---------------------------------------------------------------------------
# polyline helpers


def _drop_duplicates(pts: np.ndarray, tol: float = 1e-12, closed: bool = False) -> np.ndarray:
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > tol:
            keep.append(i)
    out = pts[keep]
    if closed and len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= tol:
        out = out[:-1]
    return out


def fillet_polyline(vertices: Sequence, radius: float,
                    max_chord_angle: float = NOSE_CHORD_ANGLE) -> np.ndarray:
    """Round every interior corner of an open polyline with a circular arc.

    Arcs are discretized into chords subtending at most ``max_chord_angle``.
    """
    v = np.asarray(vertices, dtype=float)
    if radius <= 0 or len(v) < 3:
        return v.copy()
    out = [v[0]]
    for i in range(1, len(v) - 1):
        p, prev, nxt = v[i], v[i - 1], v[i + 1]
        d1 = (prev - p) / np.linalg.norm(prev - p)
        d2 = (nxt - p) / np.linalg.norm(nxt - p)
        opening = math.acos(np.clip(d1 @ d2, -1.0, 1.0))
        if opening > math.pi - 1e-12:
            out.append(p)
            continue
        t = radius / math.tan(opening / 2)
        bis = d1 + d2
        bis /= np.linalg.norm(bis)
        centre = p + bis * radius / math.sin(opening / 2)
        t1, t2 = p + d1 * t, p + d2 * t
        a1 = math.atan2(*(t1 - centre)[::-1])
        a2 = math.atan2(*(t2 - centre)[::-1])
        sweep = (a2 - a1 + math.pi) % (2 * math.pi) - math.pi
        n = max(1, math.ceil(abs(sweep) / max_chord_angle - 1e-9))
        for ang in a1 + sweep * np.linspace(0.0, 1.0, n + 1):
            out.append(centre + radius * np.array([math.cos(ang), math.sin(ang)]))
    out.append(v[-1])
    return _drop_duplicates(np.array(out))


def _crossings(poly: np.ndarray, level: float) -> list[tuple[int, float]]:
    """(segment index, local parameter) where the polyline crosses x = level."""
    found = []
    for i in range(len(poly) - 1):
        x0, x1 = poly[i, 0], poly[i + 1, 0]
        if (x0 - level) * (x1 - level) <= 0 and x0 != x1:
            found.append((i, (level - x0) / (x1 - x0)))
        elif x0 == x1 == level:
            found.append((i, 0.0))
    return found


def clip_profile(poly: np.ndarray, level: float, left: bool = True,
                 right: bool = True) -> np.ndarray:
    """Cut a down-then-up profile polyline at height ``x = level``.

    ``left`` trims the leading descent, ``right`` the trailing ascent.
    """
    cr = _crossings(poly, level)
    if not cr:
        raise DegenerateRegion(f"profile never reaches height {level}")
    out = poly
    if right:
        i, s = cr[-1]
        end = poly[i] + s * (poly[i + 1] - poly[i])
        end[0] = level
        out = np.vstack([poly[: i + 1], end])
    if left:
        i, s = cr[0]
        start = poly[i] + s * (poly[i + 1] - poly[i])
        start[0] = level
        out = np.vstack([start, out[i + 1:]])
    return _drop_duplicates(out)


def tool_profile(tool: ToolGeometry, height: float) -> np.ndarray:
    """Edge profile of the insert from the main edge over the nose to the end edge.

    The returned polyline starts on the main edge at ``x = height``, passes the
    nose (lowest point at the origin) and ends on the end edge far enough out
    to bound any chip up to ``height`` deep.
    """
    kr, ke = tool.kappa_r, tool.end_edge_angle
    d_main = np.array([math.sin(kr), -math.cos(kr)])
    d_end = np.array([math.sin(ke), math.cos(ke)])
    reach = 4.0 * (height + tool.r_eps + 1.0)
    main_len = reach / max(math.sin(kr), 1e-3)
    end_len = reach / max(math.sin(ke), 0.05)
    corner = np.array([[*(main_len * d_main)], [0.0, 0.0], [*(end_len * d_end)]])
    poly = fillet_polyline(corner, tool.r_eps)
    if tool.r_eps > 0:
        bis = d_main + d_end
        bis /= np.linalg.norm(bis)
        centre = bis * tool.r_eps / math.sin(tool.epsilon / 2)
        lowest = centre - np.array([tool.r_eps, 0.0])
        poly = poly - lowest
    return clip_profile(poly, height, left=True, right=False)


def max_feed(tool: ToolGeometry, depth: float) -> float:
    """Largest feed for which consecutive passes still overlap.

    Equals the width of the edge profile at the depth of cut: beyond it the
    current end edge and the previous main edge meet above the workpiece
    surface and a ridge is left standing.
    """
    if depth <= 0:
        raise ValueError("depth must be positive")
    prof = tool_profile(tool, depth)
    low = int(np.argmin(prof[:, 0]))
    cr = [c for c in _crossings(prof, depth) if c[0] >= low]
    if not cr:
        return math.inf
    i, s = cr[-1]
    z_right = prof[i, 1] + s * (prof[i + 1, 1] - prof[i, 1])
    return float(z_right - prof[0, 1])


# ---------------------------------------------------------------------------
# regions


def _shoelace(pts: np.ndarray) -> float:
    x, z = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(z, -1)) - np.dot(np.roll(x, -1), z))


@dataclass(frozen=True, eq=False)
class UncutChipRegion:
    """Closed boundary polygon in the reference plane with per-segment labels.

    ``labels[i]`` classifies the segment from ``boundary[i]`` to
    ``boundary[i + 1]`` (cyclically).  The boundary is counter-clockwise in
    ``(x, z)`` and the cutting edge segments form one connected run.
    """

    boundary: np.ndarray
    labels: tuple

    def __post_init__(self):
        b = np.asarray(self.boundary, dtype=float)
        if len(self.labels) != len(b):
            raise ValueError("one label per boundary segment required")
        if _shoelace(b) < 0:
            b = b[::-1].copy()
            labs = list(self.labels)
            # segment i of the reversed ring is the old segment n-2-i
            n = len(labs)
            object.__setattr__(self, "labels", tuple(labs[(n - 2 - i) % n] for i in range(n)))
        object.__setattr__(self, "boundary", b)
        b.setflags(write=False)
        if self.area < MIN_AREA:
            raise DegenerateRegion(f"region area {self.area:.3g} mm^2 below {MIN_AREA}")
        if CUTTING_EDGE not in self.labels:
            raise DegenerateRegion("region has no cutting edge")
        runs = sum(1 for i, lab in enumerate(self.labels)
                   if lab == CUTTING_EDGE and self.labels[i - 1] != CUTTING_EDGE)
        if runs > 1:
            raise DegenerateRegion("cutting edge is not a single connected polyline")

    @property
    def area(self) -> float:
        return _shoelace(self.boundary)

    @property
    def polygon(self) -> Polygon:
        return Polygon(self.boundary)

    def is_simple(self) -> bool:
        return bool(self.polygon.is_valid)

    @property
    def diameter(self) -> float:
        b = self.boundary
        return float(np.max(np.linalg.norm(b[:, None] - b[None], axis=-1)))

    def _run(self, label):
        n = len(self.labels)
        start = next(i for i in range(n) if self.labels[i] == label and self.labels[i - 1] != label)
        idx = [start]
        i = start
        while self.labels[i % n] == label and len(idx) <= n:
            i += 1
            idx.append(i % n)
        return self.boundary[idx]

    @property
    def cutting_edge(self) -> np.ndarray:
        """Ordered vertices of the engaged cutting edge."""
        if all(lab == CUTTING_EDGE for lab in self.labels):
            return np.vstack([self.boundary, self.boundary[:1]])
        return self._run(CUTTING_EDGE)

    @property
    def edge_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.cutting_edge, axis=0), axis=1)))

    def segments(self, label: str | None = None) -> np.ndarray:
        """Boundary segments as an ``(m, 2, 2)`` array, optionally filtered by label."""
        b = self.boundary
        seg = np.stack([b, np.roll(b, -1, axis=0)], axis=1)
        if label is None:
            return seg
        mask = np.array([lab == label for lab in self.labels])
        return seg[mask]


def _from_parts(cutting: np.ndarray, free: np.ndarray) -> UncutChipRegion:
    """Region from a cutting-edge polyline followed by the free polyline closing it."""
    cutting = _drop_duplicates(np.asarray(cutting, float))
    free = _drop_duplicates(np.asarray(free, float))
    if np.linalg.norm(free[0] - cutting[-1]) < 1e-12:
        free = free[1:]
    ring = np.vstack([cutting, free])
    if len(ring) > 1 and np.linalg.norm(ring[-1] - ring[0]) < 1e-12:
        ring = ring[:-1]
    labels = [CUTTING_EDGE] * (len(cutting) - 1) + [FREE] * (len(ring) - len(cutting) + 1)
    return UncutChipRegion(ring, tuple(labels))


def rectangle_region(width: float, thickness: float) -> UncutChipRegion:
    """Ridge cut: a straight edge of length ``width`` along x at z = 0."""
    if width <= 0 or thickness <= 0:
        raise DegenerateRegion("rectangle sides must be positive")
    cutting = np.array([[0.0, 0.0], [width, 0.0]])
    free = np.array([[width, thickness], [0.0, thickness]])
    return _from_parts(cutting, free)


def build_turning_region(tool: ToolGeometry, process: ProcessParams) -> UncutChipRegion:
    """Uncut chip area of a turning pass in the reference plane.

    Raises
    ------
    FeedTooLarge
        If the feed exceeds :func:`max_feed` (cuts no longer overlap).
    DegenerateRegion
        If the resulting area is below 1e-9 mm^2.
    """
    a, f = process.depth, process.feed
    fmax = max_feed(tool, a)
    if f > fmax * (1 + 1e-9):
        raise FeedTooLarge(f"feed {f} mm exceeds maximum {fmax:.6g} mm at depth {a} mm")
    current = tool_profile(tool, a)
    previous = current + np.array([0.0, f])
    cur_line, prev_line = LineString(current), LineString(previous)
    # intersect slightly taller profiles so that f == max_feed (edges meeting
    # exactly at the surface) survives rounding
    ext = tool_profile(tool, a * (1 + 1e-7) + 1e-9)
    hit = LineString(ext).intersection(LineString(ext + np.array([0.0, f])))
    pts = [np.array(g.coords) for g in getattr(hit, "geoms", [hit]) if not g.is_empty]
    if not pts:
        raise FeedTooLarge("current and previous edges do not intersect")
    pts = np.vstack(pts)
    pts = pts[pts[:, 0] <= a * (1 + 1e-6) + 1e-9]
    if not len(pts):
        raise FeedTooLarge("edges meet above the workpiece surface")
    pts[:, 0] = np.minimum(pts[:, 0], a)
    s_cur = np.array([cur_line.project(Point(p)) for p in pts])
    p_star = pts[np.argmin(s_cur)]
    cut = np.array(substring(cur_line, 0.0, float(s_cur.min())).coords)
    cut[-1] = p_star
    s_prev = prev_line.project(Point(p_star))
    back = np.array(substring(prev_line, 0.0, s_prev).coords)[::-1]
    back[0] = p_star
    return _from_parts(cut, back)


@dataclass(frozen=True, eq=False)
class ThreadingProfile:
    """Multi-tooth threading insert.

    ``teeth`` holds one corner polyline per tooth in ``(x, z)`` (tip lowest,
    flanks rising above the deepest infeed); every interior corner is rounded
    with ``nose_radius``.  Tooth ``k`` cuts at total depth ``infeeds[k]`` in
    the groove left by teeth ``0..k-1``.  The feed per revolution is twice
    the ``pitch_width``.
    """

    teeth: tuple
    nose_radius: float
    pitch_width: float
    infeeds: tuple

    @property
    def feed(self) -> float:
        return 2.0 * self.pitch_width

    def edge(self, k: int) -> np.ndarray:
        poly = fillet_polyline(self.teeth[k], self.nose_radius)
        return poly - np.array([poly[:, 0].min(), 0.0])


def buttress_profile(pitch_width: float = 1.0, nose_radius: float = 0.1,
                     a1: float = 0.1, delta_a: float = 0.1,
                     flank_angles_deg: tuple = (3.0, 30.0),
                     height: float = 1.5) -> ThreadingProfile:
    """Two-point buttress insert; tooth 2 follows tooth 1 ``delta_a`` deeper.

    Flank angles are measured from the infeed (x) axis, steep flank first.
    """
    lo, hi = (math.radians(v) for v in flank_angles_deg)
    tooth = np.array([[height, -height * math.tan(lo)], [0.0, 0.0],
                      [height, height * math.tan(hi)]])
    return ThreadingProfile((tooth, tooth.copy()), nose_radius, pitch_width,
                            (a1, a1 + delta_a))


def build_threading_region(profile: ThreadingProfile, tooth_index: int) -> UncutChipRegion:
    """Material removed by one tooth (0-based index) given the preceding teeth."""
    a = profile.infeeds
    for k in range(1, tooth_index + 1):
        if a[k] - a[k - 1] <= 0:
            raise DegenerateRegion(f"infeed increment of tooth {k} is not positive")
    depth = a[tooth_index]
    if depth <= 0:
        raise DegenerateRegion("infeed must be positive")

    def body(k):
        edge = profile.edge(k) + np.array([depth - a[k], 0.0])
        top = edge[:, 0].max() + 10.0 * (depth + 1.0)
        ring = np.vstack([[top, edge[0, 1]], edge, [top, edge[-1, 1]]])
        return Polygon(ring), LineString(edge)

    own, own_edge = body(tooth_index)
    zs = np.concatenate([profile.edge(k)[:, 1] for k in range(tooth_index + 1)])
    material = box(-1.0, zs.min() - 1.0, depth, zs.max() + 1.0)
    if tooth_index > 0:
        material = material.difference(unary_union([body(k)[0] for k in range(tooth_index)]))
    region = own.intersection(material)
    if region.geom_type != "Polygon":
        parts = [g for g in getattr(region, "geoms", []) if g.geom_type == "Polygon"]
        if not parts:
            raise DegenerateRegion("tooth removes no material")
        region = max(parts, key=lambda g: g.area)
    region = shapely.set_precision(region, 0.0)
    ring = _drop_duplicates(np.array(region.exterior.coords)[:-1], closed=True)
    labels = []
    for i in range(len(ring)):
        mid = 0.5 * (ring[i] + ring[(i + 1) % len(ring)])
        on = own_edge.distance(Point(mid)) < ON_EDGE_TOL
        labels.append(CUTTING_EDGE if on else FREE)
    return UncutChipRegion(ring, tuple(labels))


# ---------------------------------------------------------------------------
# meshing


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangulation of a chip region; triangles are counter-clockwise in (x, z)."""

    nodes: np.ndarray
    triangles: np.ndarray
    edge_nodes: np.ndarray
    target_edge_length: float = 0.0
    region: UncutChipRegion | None = field(default=None, repr=False)

    @property
    def element_centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def element_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def is_edge_node(self) -> np.ndarray:
        mask = np.zeros(len(self.nodes), bool)
        mask[self.edge_nodes] = True
        return mask

    def cutting_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Mesh boundary edges lying on the cutting edge, ordered along it.

        Returns ``(edges, owner)``: node index pairs ``(k, 2)`` and the
        triangle each edge belongs to.
        """
        tri = self.triangles
        e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        owner = np.tile(np.arange(len(tri)), 3)
        key = np.sort(e, axis=1)
        _, first, inv, cnt = np.unique(key, axis=0, return_index=True, return_inverse=True,
                                       return_counts=True)
        single = np.flatnonzero(cnt[inv.ravel()] == 1)
        on = self.is_edge_node
        single = single[on[e[single, 0]] & on[e[single, 1]]]
        edge = self.region.cutting_edge
        mid = self.nodes[e[single]].mean(axis=1)
        single = single[_segment_distance(mid, edge) <= ON_EDGE_TOL]
        pos = _arc_position(self.nodes[e[single]].mean(axis=1), edge)
        order = single[np.argsort(pos, kind="stable")]
        return e[order], owner[order]

    def min_angles(self) -> np.ndarray:
        """Smallest interior angle of every triangle, radians."""
        p = self.nodes[self.triangles]
        out = np.full(len(p), np.pi)
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cos = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            out = np.minimum(out, np.arccos(np.clip(cos, -1, 1)))
        return out


def _arc_position(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Arc length along ``polyline`` of the closest point to each of ``points``."""
    a, b = polyline[:-1], polyline[1:]
    d = b - a
    seg_len = np.linalg.norm(d, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    t = np.clip(np.einsum("mkj,kj->mk", points[:, None] - a[None], d) / seg_len**2, 0, 1)
    dist = np.linalg.norm(points[:, None] - (a[None] + t[..., None] * d[None]), axis=2)
    k = np.argmin(dist, axis=1)
    return cum[k] + t[np.arange(len(points)), k] * seg_len[k]


def _segment_distance(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    a, b = polyline[:-1], polyline[1:]
    ab = b - a
    ap = points[:, None, :] - a[None]
    t = np.clip(np.sum(ap * ab, -1) / np.maximum(np.sum(ab * ab, -1), 1e-300), 0, 1)
    d = ap - t[..., None] * ab
    return np.min(np.linalg.norm(d, axis=-1), axis=1)


def _subdivide(region: UncutChipRegion, h: float):
    verts, segs, marks = [], [], []
    b = region.boundary
    for i, lab in enumerate(region.labels):
        p, q = b[i], b[(i + 1) % len(b)]
        n = max(1, math.ceil(np.linalg.norm(q - p) / h - 1e-9))
        for s in range(n):
            verts.append(p + (q - p) * s / n)
            marks.append(1 if lab == CUTTING_EDGE else 2)
    m = len(verts)
    segs = [[i, (i + 1) % m] for i in range(m)]
    return np.array(verts), np.array(segs), np.array(marks)


def triangulate(region: UncutChipRegion, target_edge_length: float,
                min_angle_deg: float = 20.0) -> TriMesh:
    """Conforming quality triangulation of a chip region.

    Boundary segments are pre-split to ``target_edge_length``; the mesher adds
    interior points until every triangle has area below that of an
    equilateral triangle of this side and the minimum angle bound holds
    (except at input corners sharper than the bound).  Triangles whose three
    vertices all sit on the cutting edge are split so that every element
    carries at least one free node.
    """
    import triangle as tr

    if target_edge_length <= 0:
        raise ValueError("target edge length must be positive")
    verts, segs, marks = _subdivide(region, target_edge_length)
    max_area = math.sqrt(3) / 4 * target_edge_length ** 2
    extra = np.zeros((0, 2))
    edge = region.cutting_edge
    for _ in range(8):
        pslg = {"vertices": np.vstack([verts, extra]), "segments": segs,
                "segment_markers": marks[:, None]}
        # the switch parser does not understand exponent notation
        area = np.format_float_positional(max_area, trim="-")
        try:
            out = tr.triangulate(pslg, f"pq{min_angle_deg:g}a{area}Q")
        except Exception as exc:  # triangle raises bare RuntimeError
            raise MeshFailure(str(exc)) from exc
        if "triangles" not in out or len(out["triangles"]) == 0:
            raise MeshFailure("mesher returned no triangles")
        nodes = np.asarray(out["vertices"], float)
        tris = np.asarray(out["triangles"], np.int64)
        on_edge = _segment_distance(nodes, edge) <= ON_EDGE_TOL
        stuck = np.all(on_edge[tris], axis=1)
        if not stuck.any():
            break
        extra = np.vstack([extra, nodes[tris[stuck]].mean(axis=1)])
    else:
        raise MeshFailure("could not remove elements lying entirely on the cutting edge")
    p = nodes[tris]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    if np.any(np.abs(signed) <= 1e-300):
        raise MeshFailure("degenerate triangle produced")
    return TriMesh(nodes, tris, np.flatnonzero(on_edge), target_edge_length, region)
