"""CSV tables and SVG drawings of regions, meshes, flow fields and chip segments.

The SVG writer is deliberately tiny and text based so repeated runs give
byte-identical files.  Force curves go through matplotlib with a fixed hash
salt and no date stamp.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .geometry import CUTTING_EDGE, TriMesh, UncutChipRegion
from .plate_fe import FlowField

CSV_COLUMNS = ("model", "feed_mm", "depth_mm", "Fx_N", "Fy_N", "Fz_N", "area_mm2", "Ne",
               "a_eff_mm", "iters", "error")

COLORS = {"curved": "#2a9d3f", "colwell": "#d62728", "young": "#1f5fbf"}


def fmt(x) -> str:
    """Fixed formatting for floats in tables (empty for None/NaN)."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not np.isfinite(x):
        return ""
    return f"{x:.10g}"


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r.get(c, "") if isinstance(r.get(c, ""), str) else fmt(r.get(c)) for c in columns])


def write_field_csv(path, field: FlowField) -> None:
    nodes = field.mesh.nodes
    rows = [{"x_mm": x, "z_mm": z, "g_x": gx, "g_z": gz}
            for (x, z), (gx, gz) in zip(nodes, field.g)]
    write_rows(path, ("x_mm", "z_mm", "g_x", "g_z"), rows)


def write_segments_csv(path, h, dA) -> None:
    rows = [{"seed": i, "h_mm": hi, "dA_mm2": ai} for i, (hi, ai) in enumerate(zip(h, dA))]
    write_rows(path, ("seed", "h_mm", "dA_mm2"), rows)


# ---------------------------------------------------------------------------
# SVG


class SvgCanvas:
    """Maps reference-plane coordinates (z to the right, x up) onto an SVG page."""

    def __init__(self, points, width: float = 640.0, margin: float = 20.0):
        p = np.asarray(points, float)
        lo, hi = p.min(axis=0), p.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        self.scale = (width - 2 * margin) / max(span[1], span[0])
        self.lo, self.margin = lo, margin
        self.width = width
        self.height = span[0] * self.scale + 2 * margin
        self.items: list[str] = []

    def xy(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        sx = self.margin + (pts[:, 1] - self.lo[1]) * self.scale
        sy = self.height - self.margin - (pts[:, 0] - self.lo[0]) * self.scale
        return np.column_stack([sx, sy])

    @staticmethod
    def _pts(xy) -> str:
        return " ".join(f"{a:.3f},{b:.3f}" for a, b in xy)

    def polyline(self, pts, stroke="#000", width=1.0, closed=False, fill="none"):
        tag = "polygon" if closed else "polyline"
        self.items.append(f'<{tag} points="{self._pts(self.xy(pts))}" fill="{fill}" '
                          f'stroke="{stroke}" stroke-width="{width}"/>')

    def line(self, a, b, stroke="#000", width=1.0):
        (x1, y1), (x2, y2) = self.xy(np.vstack([a, b]))
        self.items.append(f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                          f'stroke="{stroke}" stroke-width="{width}"/>')

    def text(self, x, y, s, size=12):
        self.items.append(f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" font-family="sans-serif">{s}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width:.0f}" '
                f'height="{self.height:.0f}" viewBox="0 0 {self.width:.3f} {self.height:.3f}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>\n"])

    def save(self, path) -> None:
        Path(path).write_text(self.render())


def _draw_region(c: SvgCanvas, region: UncutChipRegion):
    seg = region.segments()
    for (a, b), lab in zip(seg, region.labels):
        c.line(a, b, stroke="#c00" if lab == CUTTING_EDGE else "#444", width=2.0 if lab == CUTTING_EDGE else 1.2)


def region_svg(region: UncutChipRegion, mesh: TriMesh | None = None) -> SvgCanvas:
    c = SvgCanvas(region.boundary)
    if mesh is not None:
        for tri in mesh.triangles:
            c.polyline(mesh.nodes[tri], stroke="#9ab", width=0.4, closed=True)
    _draw_region(c, region)
    return c


def quiver_svg(field: FlowField, length: float | None = None, every: int = 1) -> SvgCanvas:
    mesh = field.mesh
    c = SvgCanvas(mesh.region.boundary)
    _draw_region(c, mesh.region)
    L = length or 0.6 * mesh.target_edge_length
    for p, g in zip(mesh.nodes[::every], field.g[::every]):
        c.line(p, p + L * g, stroke="#2a6", width=0.6)
    return c


def streamlines_svg(region: UncutChipRegion, lines, every: int = 1) -> SvgCanvas:
    c = SvgCanvas(region.boundary)
    for s in lines[::every]:
        c.polyline(s.points, stroke=COLORS["curved"], width=0.5)
    _draw_region(c, region)
    return c


def young_svg(region: UncutChipRegion, young) -> SvgCanvas:
    c = SvgCanvas(region.boundary)
    for s, e, ch in zip(young.seeds, young.ends, young.chopped):
        c.line(s, e, stroke="#f80" if ch else COLORS["young"], width=0.7)
    _draw_region(c, region)
    return c


def force_plot_svg(path, series: dict, xlabel: str, ylabel: str) -> None:
    """Line plot of ``{label: (x, y)}`` written as a reproducible SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "curvedchip", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, (x, y) in series.items():
            ax.plot(x, y, "o-", ms=3, label=label, color=COLORS.get(label))
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    Path(path).write_text(buf.getvalue())
