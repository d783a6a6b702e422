"""Rotations between the machine, orthogonal, edge, rake-face and chip-flow frames.

Frame 0 is the machine frame (x, y, z), frame 4 the chip flow frame whose
x axis is the rake face normal direction ``v`` and z axis the chip flow
direction ``u``.  ``T40`` maps the basis vectors of frame 0 onto those of
frame 4; its first column is ``-n`` and its third column is the tilted flow
direction on the rake face.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GimbalSingularity

SINGULAR_SIN_PHI = 1e-8
GIMBAL_COS = 1e-8

_RZ_MINUS_HALF_PI = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def flow_angle(g) -> np.ndarray | float:
    """Angle of an in-plane direction ``(g_x, g_z)`` measured from the z axis.

    Two-argument arctangent, so flow towards -z is resolved unambiguously.
    """
    g = np.asarray(g, dtype=float)
    phi = np.arctan2(g[..., 0], g[..., 1])
    return float(phi) if phi.ndim == 0 else phi


def solve_local_angles(n, phi):
    """Local normal rake and inclination angle from the rake normal and flow angle.

    Parameters
    ----------
    n : array_like, shape (3,)
        Unit rake face normal in the machine frame.
    phi : float or ndarray
        Flow angle(s) from :func:`flow_angle`.

    Returns
    -------
    alpha_n, lambda_s
        Same shape as ``phi``.

    Notes
    -----
    ``sin(lambda_s)`` is evaluated as ``(n_z sin(phi) - n_x cos(phi)) / cos(alpha_n)``;
    this equals ``(n_z - cos(phi) sin(alpha_n)) / (cos(alpha_n) sin(phi))`` for a
    unit normal but stays well conditioned as ``sin(phi)`` approaches zero.
    Below ``|sin(phi)| < 1e-8`` the dedicated singular branch is used.
    """
    nx, _, nz = (float(v) for v in n)
    phi_arr = np.asarray(phi, dtype=float)
    s, c = np.sin(phi_arr), np.cos(phi_arr)
    singular = np.abs(s) < SINGULAR_SIN_PHI
    sin_a = np.where(singular, nz * c, nx * s + nz * c)
    alpha = np.arcsin(np.clip(sin_a, -1.0, 1.0))
    cos_a = np.cos(alpha)
    if np.any(np.abs(cos_a) < GIMBAL_COS):
        raise GimbalSingularity("cos(alpha_n) vanishes; rake normal lies in the reference plane")
    sin_l = np.where(singular, -nx / (cos_a * np.where(singular, c, 1.0)),
                     (nz * s - nx * c) / cos_a)
    lam = np.arcsin(np.clip(sin_l, -1.0, 1.0))
    if phi_arr.ndim == 0:
        return float(alpha), float(lam)
    return alpha, lam


def build_T40(phi: float, lambda_s: float, alpha_n: float, eta: float) -> np.ndarray:
    """Compose the machine-to-chip-flow transformation from its five rotations."""
    return (rotation_y(phi) @ _RZ_MINUS_HALF_PI @ rotation_z(lambda_s)
            @ rotation_y(alpha_n) @ rotation_x(eta))


def build_T40_many(phi, lambda_s, alpha_n, eta, g=None) -> np.ndarray:
    """Vectorized :func:`build_T40`; returns an ``(m, 3, 3)`` stack.

    When the unit flow directions ``g`` are given, the flow-angle rotation
    uses ``sin(phi) = g_x`` and ``cos(phi) = g_z`` directly, so axis-aligned
    flow gives exactly zero off-axis terms.
    """
    phi, lambda_s, alpha_n, eta = np.broadcast_arrays(
        *(np.atleast_1d(np.asarray(v, dtype=float)) for v in (phi, lambda_s, alpha_n, eta)))
    m = phi.shape[0]

    def stack(kind, ang, cs=None):
        c, s = (np.cos(ang), np.sin(ang)) if cs is None else cs
        out = np.zeros((m, 3, 3))
        if kind == "x":
            out[:, 0, 0] = 1
            out[:, 1, 1], out[:, 1, 2], out[:, 2, 1], out[:, 2, 2] = c, -s, s, c
        elif kind == "y":
            out[:, 1, 1] = 1
            out[:, 0, 0], out[:, 0, 2], out[:, 2, 0], out[:, 2, 2] = c, s, -s, c
        else:
            out[:, 2, 2] = 1
            out[:, 0, 0], out[:, 0, 1], out[:, 1, 0], out[:, 1, 1] = c, -s, s, c
        return out

    cs = None
    if g is not None:
        g = np.atleast_2d(np.asarray(g, dtype=float))
        g = g / np.linalg.norm(g, axis=1)[:, None]
        cs = (g[:, 1], g[:, 0])
    T = stack("y", phi, cs) @ _RZ_MINUS_HALF_PI
    T = T @ stack("z", lambda_s) @ stack("y", alpha_n) @ stack("x", eta)
    return T


@dataclass(frozen=True)
class LocalFrame:
    """Equivalent oblique cut at one point of the rake face (Stabler's rule: eta = lambda_s)."""

    phi: float
    alpha_n: float
    lambda_s: float
    eta: float
    T40: np.ndarray


def local_frame(n, g, eta: float | None = None) -> LocalFrame:
    """Local frame for rake normal ``n`` and in-plane flow direction ``g = (g_x, g_z)``."""
    phi = flow_angle(g)
    alpha, lam = solve_local_angles(n, phi)
    eta = lam if eta is None else eta
    return LocalFrame(phi, alpha, lam, eta, build_T40(phi, lam, alpha, eta))


def local_frames(n, g) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized frames for ``(m, 2)`` flow directions: ``(phi, alpha_n, lambda_s, T40)``."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    phi = np.atleast_1d(flow_angle(g))
    alpha, lam = solve_local_angles(n, phi)
    return phi, alpha, lam, build_T40_many(phi, lam, alpha, lam, g)


def tilt_field(g, n) -> np.ndarray:
    """Flow direction carried onto the rake face, ``T40 @ (0, 0, 1)``.

    Accepts one ``(2,)`` direction or an ``(m, 2)`` array.  For a flat
    orthogonal tool the result is ``(g_x, 0, g_z)``.
    """
    g = np.asarray(g, dtype=float)
    _, _, _, T = local_frames(n, g.reshape(-1, 2))
    out = T[:, :, 2]
    return out[0] if g.ndim == 1 else out


def tilted_inplane(g, n) -> np.ndarray:
    """Reference-plane components ``(gt_x, gt_z)`` of :func:`tilt_field` for ``(m, 2)`` input.

    Closed form of ``T40 @ (0, 0, 1)`` with ``eta = lambda_s``; used on the
    hot path of streamline integration.
    """
    g = np.asarray(g, dtype=float)
    phi = np.arctan2(g[:, 0], g[:, 1])
    alpha, lam = solve_local_angles(n, phi)
    sa, ca = np.sin(alpha), np.cos(alpha)
    sl, cl = np.sin(lam), np.cos(lam)
    # R_z(-pi/2) R_z(lam) R_y(alpha) R_x(lam) e_z, before the final R_y(phi)
    vx = sl * sa * cl - cl * sl
    vz = ca * cl
    sp, cp = np.sin(phi), np.cos(phi)
    return np.stack([cp * vx + sp * vz, -sp * vx + cp * vz], axis=1)
