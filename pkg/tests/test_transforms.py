import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from curvedchip.errors import GimbalSingularity
from curvedchip.geometry import rake_normal
from curvedchip.transforms import (SINGULAR_SIN_PHI, build_T40, build_T40_many, flow_angle, local_frame, local_frames,
                                   rotation_x, rotation_y, rotation_z, solve_local_angles, tilt_field,
                                   tilted_inplane)

angles = st.floats(-math.pi, math.pi, allow_nan=False)
rakes = st.floats(-0.6, 0.6)


@st.composite
def normals(draw):
    return rake_normal(draw(rakes), draw(rakes))


def test_rotations_right_handed():
    e = np.eye(3)
    assert np.allclose(rotation_z(math.pi / 2) @ e[0], e[1])
    assert np.allclose(rotation_x(math.pi / 2) @ e[1], e[2])
    assert np.allclose(rotation_y(math.pi / 2) @ e[2], e[0])


@pytest.mark.parametrize("g,phi", [((0, 1), 0.0), ((1, 0), math.pi / 2), ((0, -1), math.pi),
                                   ((-1, 0), -math.pi / 2), ((1, 1), math.pi / 4)])
def test_flow_angle(g, phi):
    assert flow_angle(g) == pytest.approx(phi)


@given(normals(), angles)
@settings(max_examples=300)
def test_T40_first_column_is_minus_normal(n, phi):
    f = local_frame(n, (math.sin(phi), math.cos(phi)))
    # inside the singular band the dropped sin(phi) terms bound the residual
    tol = 1e-12 + (abs(math.sin(phi)) if abs(math.sin(phi)) < SINGULAR_SIN_PHI else 0.0)
    assert np.linalg.norm(f.T40[:, 0] + n) < tol
    assert np.allclose(f.T40 @ f.T40.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(f.T40) == pytest.approx(1.0, abs=1e-12)


@given(normals(), angles)
@settings(max_examples=200)
def test_tilted_flow_lies_on_rake_and_keeps_heading(n, phi):
    g = np.array([math.sin(phi), math.cos(phi)])
    u = tilt_field(g, n)
    tol = 1e-12 + (abs(g[0]) if abs(g[0]) < SINGULAR_SIN_PHI else 0.0)
    assert abs(np.dot(u, n)) < tol
    assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)
    # the tilted direction is not turned around in the reference plane
    assume(np.hypot(u[0], u[2]) > 1e-6)
    assert np.dot([u[0], u[2]], g) > 0


def test_flat_tool_tilt_is_identity(rng):
    phi = rng.uniform(-math.pi, math.pi, 50)
    g = np.column_stack([np.sin(phi), np.cos(phi)])
    u = tilt_field(g, [0, 1, 0])
    assert np.allclose(u[:, [0, 2]], g, atol=1e-13)
    assert np.allclose(u[:, 1], 0, atol=1e-13)


def test_closed_form_tilt_matches_composition(rng):
    n = rake_normal(math.radians(-7.5), math.radians(-5))
    phi = rng.uniform(-math.pi, math.pi, 500)
    g = np.column_stack([np.sin(phi), np.cos(phi)])
    assert np.allclose(tilted_inplane(g, n), tilt_field(g, n)[:, [0, 2]], atol=1e-14)


def test_vectorized_matches_scalar(rng):
    n = rake_normal(0.2, -0.1)
    phi = rng.uniform(-3, 3, 20)
    g = np.column_stack([np.sin(phi), np.cos(phi)])
    ph, al, la, T = local_frames(n, g)
    for i in range(20):
        assert np.allclose(T[i], build_T40(ph[i], la[i], al[i], la[i]), atol=1e-14)
    assert np.allclose(build_T40_many(ph, la, al, la), T)


@pytest.mark.parametrize("phi", [0.0, math.pi, -math.pi, 1e-10, math.pi - 1e-10])
def test_singular_branch(phi):
    n = rake_normal(math.radians(-7.5), math.radians(-5))
    a, lam = solve_local_angles(n, phi)
    T = build_T40(phi, lam, a, lam)
    assert np.all(np.isfinite(T))
    assert np.allclose(T[:, 0], -n, atol=1e-12)


def test_orthogonal_flat_rake_angles():
    # flat rake face: zero normal rake and inclination for any flow direction
    a, lam = solve_local_angles([0, 1, 0], np.linspace(-3, 3, 9))
    assert np.allclose(a, 0) and np.allclose(lam, 0)


def test_side_rake_seen_head_on():
    # flow along z sees the whole side rake as normal rake
    gf = math.radians(10)
    a, lam = solve_local_angles(rake_normal(gf, 0.0), 0.0)
    assert abs(a) == pytest.approx(gf, abs=1e-12)
    assert lam == pytest.approx(0.0, abs=1e-12)


def test_gimbal():
    with pytest.raises(GimbalSingularity):
        solve_local_angles([0.0, 0.0, 1.0], 0.0)
