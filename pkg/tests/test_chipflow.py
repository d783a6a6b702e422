import itertools
import math

import numpy as np
import pytest
from shapely.geometry import LineString, Point

from curvedchip.chipflow import (FieldInterpolator, StreamlineTracer, _grow_strips, colwell_decomposition,
                                 colwell_model, curved_decomposition, trace_streamline, trace_streamlines,
                                 young_chip_decomposition, young_decomposition)
from curvedchip.errors import TraceStalled
from curvedchip.geometry import (CUTTING_EDGE, FREE, ProcessParams, ToolGeometry, build_threading_region,
                                 build_turning_region, buttress_profile, max_feed, rectangle_region,
                                 triangulate)
from curvedchip.plate_fe import gradient_field, solve_plate


def flow(region, size):
    mesh = triangulate(region, size)
    return mesh, gradient_field(mesh, solve_plate(mesh))


@pytest.fixture(scope="module")
def ridge():
    return flow(rectangle_region(2.0, 0.1), 0.01)


@pytest.fixture(scope="module")
def vtool_flow():
    t = ToolGeometry.from_degrees(60, 60, 0.2)
    r = build_turning_region(t, ProcessParams(feed=0.6 * max_feed(t, 1.0), depth=1.0))
    return flow(r, 0.02)


class TestInterpolator:
    def test_nodes_reproduced(self, ridge):
        mesh, field = ridge
        ip = FieldInterpolator(field)
        inner = mesh.nodes[~mesh.is_edge_node][:20]
        # nudge into the interior so every point has a containing triangle
        c = mesh.element_centroids.mean(axis=0)
        p = inner + 1e-9 * (c - inner)
        assert np.allclose(ip.direction(p), field.g[~mesh.is_edge_node][:20], atol=1e-6)

    def test_outside_is_nan(self, ridge):
        _, field = ridge
        out = field.at(np.array([[5.0, 5.0], [-1, 0.05]]))
        assert np.all(np.isnan(out))

    def test_unit_length(self, ridge, rng):
        mesh, field = ridge
        p = np.column_stack([rng.uniform(0, 2, 200), rng.uniform(0, 0.1, 200)])
        d = field.at(p)
        ok = ~np.isnan(d[:, 0])
        assert ok.sum() > 150
        assert np.allclose(np.linalg.norm(d[ok], axis=1), 1.0)


class TestStreamlines:
    def test_ridge_thickness(self, ridge):
        mesh, field = ridge
        seeds = np.column_stack([np.linspace(0.5, 1.5, 11), np.full(11, 0.05)])
        h = StreamlineTracer(field).thickness(seeds)
        assert np.allclose(h, 0.1, rtol=5e-3)

    def test_labels(self, vtool_flow):
        mesh, field = vtool_flow
        lines = trace_streamlines(field, mesh.element_centroids[::25])
        assert all(s.start_label == CUTTING_EDGE for s in lines)
        assert all(s.end_label == FREE for s in lines)
        for s in lines:
            assert s.arc_length >= s.chord - 1e-12
            assert s.arc_length == pytest.approx(np.linalg.norm(np.diff(s.points, axis=0), axis=1).sum())

    def test_endpoints_on_boundary(self, vtool_flow):
        mesh, field = vtool_flow
        ring = LineString(np.vstack([mesh.region.boundary, mesh.region.boundary[:1]]))
        for s in trace_streamlines(field, mesh.element_centroids[::40]):
            assert ring.distance(Point(s.points[0])) < 1e-9
            assert ring.distance(Point(s.points[-1])) < 1e-9

    def test_do_not_cross(self, vtool_flow):
        mesh, field = vtool_flow
        edge = LineString(mesh.region.cutting_edge)
        # seeds just off the edge, evenly spaced along it
        c = mesh.region.polygon.representative_point()
        seeds = []
        for s in np.linspace(0.02, 0.98, 50) * edge.length:
            p = np.array(edge.interpolate(s).coords[0])
            q = p + 1e-3 * (np.array(c.coords[0]) - p) / np.linalg.norm(np.array(c.coords[0]) - p)
            seeds.append(q)
        lines = [LineString(s.points) for s in trace_streamlines(field, np.array(seeds))]
        for a, b in itertools.combinations(lines, 2):
            assert a.distance(b) > 1e-9

    def test_single_seed_wrapper(self, vtool_flow):
        mesh, field = vtool_flow
        s = trace_streamline(field, mesh.element_centroids[0])
        assert s.arc_length > 0
        other = triangulate(mesh.region, 0.05)
        with pytest.raises(ValueError):
            trace_streamline(field, mesh.element_centroids[0], mesh=other)

    def test_stall_detected(self, ridge):
        _, field = ridge
        tracer = StreamlineTracer(field)
        tracer.max_steps = 2
        with pytest.raises(TraceStalled):
            tracer.thickness(np.array([[1.0, 0.05]]))

    def test_step_convergence(self, vtool_flow):
        mesh, field = vtool_flow
        seeds = mesh.element_centroids[::30]
        h1 = StreamlineTracer(field, step=0.01).thickness(seeds)
        h2 = StreamlineTracer(field, step=0.0025).thickness(seeds)
        assert np.max(np.abs(h1 - h2) / h2) < 0.02


class TestCurvedDecomposition:
    def test_area_and_edge_partition(self, vtool_flow):
        mesh, field = vtool_flow
        d = curved_decomposition(mesh, field)
        assert d.dA.sum() == pytest.approx(mesh.region.area, rel=1e-9)
        assert d.dL.sum() == pytest.approx(mesh.region.edge_length, rel=1e-9)
        assert d.n_elements == len(mesh.triangles)
        assert np.all(d.h > 0)

    def test_mesh_mismatch(self, vtool_flow):
        mesh, field = vtool_flow
        with pytest.raises(ValueError):
            curved_decomposition(triangulate(mesh.region, 0.05), field)

    def test_frames_follow_normal(self, vtool_flow):
        mesh, field = vtool_flow
        n = np.array([-0.0865, 0.9877, -0.13])
        n /= np.linalg.norm(n)
        d = curved_decomposition(mesh, field, rake_normal=n)
        assert np.allclose(d.T40[:, :, 0], -n, atol=1e-12)
        assert np.allclose(d.T40_edge[:, :, 0], -n, atol=1e-12)


class TestColwell:
    def test_rectangle(self):
        m = colwell_model(rectangle_region(2.0, 0.1))
        assert m.chord_length == pytest.approx(2.0)
        assert m.equivalent_thickness == pytest.approx(0.1)
        assert np.allclose(m.flow_direction, [0, 1])

    @pytest.mark.parametrize("frac", [0.1, 0.5, 1.0])
    def test_flow_leaves_the_edge(self, vtool_region, frac):
        r = vtool_region(frac)
        m = colwell_model(r)
        # the convex edge bulges behind its chord, so flow points away from every edge vertex
        side = (r.cutting_edge - m.chord_start) @ m.flow_direction
        assert side.max() < 1e-12 and side.min() < -1e-3
        assert np.dot(m.flow_direction, m.chord_end - m.chord_start) == pytest.approx(0, abs=1e-12)

    def test_decomposition(self, vtool_region):
        r = vtool_region(0.5)
        d = colwell_decomposition(colwell_model(r))
        assert d.n_elements == 1 and d.n_edges == 1
        assert d.dA[0] == pytest.approx(r.area)
        assert d.dL[0] == pytest.approx(r.edge_length)

    def test_threading_chord_along_feed(self):
        r = build_threading_region(buttress_profile(delta_a=0.1), 1)
        m = colwell_model(r)
        assert abs(m.flow_direction[1]) < 1e-12


class TestYoung:
    def test_rectangle(self):
        r = rectangle_region(2.0, 0.1)
        y = young_decomposition(r, 40)
        assert np.allclose(y.lengths, 0.1)
        assert not y.chopped.any()
        assert y.areas.sum() == pytest.approx(0.2)
        assert y.raw_area == pytest.approx(0.2, rel=1e-12)

    def test_chopping_at_large_feed(self, vtool_region):
        y = young_decomposition(vtool_region(1.0), 128)
        assert y.chopped.any()
        assert y.areas.sum() == pytest.approx(y.region_area, rel=1e-12)
        # the unscaled strip areas already cover the chip closely
        assert y.raw_area == pytest.approx(y.region_area, rel=0.05)

    def test_order_independent(self, rng):
        m = 30
        s = np.column_stack([rng.uniform(0, 1, m), np.zeros(m)])
        ang = rng.uniform(0.3, math.pi - 0.3, m)
        nu = np.column_stack([np.cos(ang), np.sin(ang)])
        full = rng.uniform(0.2, 1.0, m)
        L1, c1 = _grow_strips(s, nu, full, 1e-12)
        p = rng.permutation(m)
        L2, c2 = _grow_strips(s[p], nu[p], full[p], 1e-12)
        assert np.allclose(L1[p], L2) and np.array_equal(c1[p], c2)

    def test_chopped_strips_do_not_cross(self, vtool_region):
        y = young_decomposition(vtool_region(1.0), 64)
        segs = [LineString([a, b]) for a, b in zip(y.seeds, y.ends)]
        for i, j in itertools.combinations(range(len(segs)), 2):
            inter = segs[i].intersection(segs[j])
            if inter.is_empty:
                continue
            # touching is allowed only at a strip tip
            ends = [Point(y.ends[i]), Point(y.ends[j])]
            assert min(e.distance(inter) for e in ends) < 1e-9

    def test_too_few(self):
        with pytest.raises(ValueError):
            young_decomposition(rectangle_region(1, 0.1), 4)

    def test_chip_decomposition(self, vtool_region):
        y = young_decomposition(vtool_region(0.5), 64)
        d = young_chip_decomposition(y)
        assert d.dL.sum() == pytest.approx(vtool_region(0.5).edge_length)
        assert d.dA.sum() == pytest.approx(vtool_region(0.5).area)
