"""Cutting force characteristics and their integration over a chip decomposition.

Forces are in N, lengths in mm, coefficients in MPa (N/mm^2) and N/mm.  The
elementary force on a chip element of thickness ``h`` and area ``dA`` is
``(K_vc(h), 0, K_uc(h)) dA`` in the chip flow frame; edge pieces of length
``dL`` carry ``(K_ve, 0, K_ue) dL``.  ``T40`` rotates both into the machine
frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chipflow import ChipDecomposition, ColwellModel, colwell_decomposition
from .errors import InvalidChipThickness, NoConvergence


def _check_h(h):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise InvalidChipThickness("uncut chip thickness must be positive")
    return h


@dataclass(frozen=True)
class MaterialModel:
    """Base for characteristic laws; ``K_ue``, ``K_ve`` are the edge coefficients in N/mm."""

    K_ue: float = 0.0
    K_ve: float = 0.0

    kind = "abstract"

    def coefficients(self, h, alpha_n=0.0, lambda_s=0.0, eta=None):
        """Return ``(K_uc, K_vc)`` in MPa, broadcast over the inputs."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearMaterial(MaterialModel):
    K_uc: float = 0.0
    K_vc: float = 0.0

    kind = "linear"

    def coefficients(self, h, alpha_n=0.0, lambda_s=0.0, eta=None):
        h = _check_h(h)
        return np.full(h.shape, float(self.K_uc)), np.full(h.shape, float(self.K_vc))

    def to_dict(self):
        return {"kind": self.kind, "K_uc_MPa": self.K_uc, "K_vc_MPa": self.K_vc,
                "K_ue_N_per_mm": self.K_ue, "K_ve_N_per_mm": self.K_ve}


@dataclass(frozen=True)
class PowerLawMaterial(MaterialModel):
    """``K_jc = c_j * h**p_j`` with ``h`` in mm."""

    c_u: float = 1.0
    p_u: float = 0.0
    c_v: float = 1.0
    p_v: float = 0.0

    kind = "power_law"

    def coefficients(self, h, alpha_n=0.0, lambda_s=0.0, eta=None):
        h = _check_h(h)
        return self.c_u * h ** self.p_u, self.c_v * h ** self.p_v

    def to_dict(self):
        return {"kind": self.kind, "c_u_MPa": self.c_u, "p_u": self.p_u, "c_v_MPa": self.c_v,
                "p_v": self.p_v, "K_ue_N_per_mm": self.K_ue, "K_ve_N_per_mm": self.K_ve}


@dataclass(frozen=True)
class TiShearMaterial(MaterialModel):
    """Orthogonal-to-oblique shear model with an ``h`` dependent chip compression ratio.

    ``beta_a``, ``C0`` and ``C1`` are affine in the local normal rake (radians):
    ``beta_a = beta0 + beta1*alpha_n`` and so on; the compression ratio is
    ``r_c = C0 * h**C1``.
    """

    tau_s: float = 613.0
    beta0: float = 0.34
    beta1: float = 0.441
    c00: float = 0.88
    c01: float = 0.63
    c10: float = 0.35
    c11: float = 0.12

    kind = "ti_shear"

    def __post_init__(self):
        if self.tau_s <= 0:
            raise ValueError("tau_s must be positive")
        if self.c00 <= 0:
            raise ValueError("C0 must be positive")

    def shear_angle(self, h, alpha_n=0.0):
        h = _check_h(h)
        alpha_n = np.asarray(alpha_n, float)
        rc = (self.c00 + self.c01 * alpha_n) * h ** (self.c10 + self.c11 * alpha_n)
        return np.arctan(rc * np.cos(alpha_n) / (1.0 - rc * np.sin(alpha_n)))

    def coefficients(self, h, alpha_n=0.0, lambda_s=0.0, eta=None):
        h = _check_h(h)
        alpha_n = np.asarray(alpha_n, float)
        lambda_s = np.asarray(lambda_s, float)
        eta = lambda_s if eta is None else np.asarray(eta, float)
        beta_a = self.beta0 + self.beta1 * alpha_n
        phi_n = self.shear_angle(h, alpha_n)
        beta_n = np.arctan(np.tan(beta_a) * np.cos(eta))
        t2 = np.tan(eta) ** 2 * np.sin(beta_n) ** 2
        common = (self.tau_s * np.sqrt(1.0 + t2)
                  / (np.cos(lambda_s) * np.sin(phi_n)
                     * np.sqrt(np.cos(phi_n + beta_n - alpha_n) ** 2 + t2)))
        return common * np.sin(beta_a), common * np.cos(beta_a)

    def to_dict(self):
        return {"kind": self.kind, "tau_s_MPa": self.tau_s, "beta_a": [self.beta0, self.beta1],
                "C0": [self.c00, self.c01], "C1": [self.c10, self.c11],
                "K_ue_N_per_mm": self.K_ue, "K_ve_N_per_mm": self.K_ve}


def ti6al4v() -> TiShearMaterial:
    return TiShearMaterial(K_ue=32.34, K_ve=4.6)


def aisi1045() -> PowerLawMaterial:
    return PowerLawMaterial(c_u=691.6, p_u=-0.534, c_v=1204.3, p_v=-0.384)


def al7075() -> LinearMaterial:
    return LinearMaterial(K_uc=229.0, K_vc=856.0, K_ue=87.0, K_ve=15.0)


PRESETS: dict[str, Callable[[], MaterialModel]] = {
    "Ti6Al4V": ti6al4v,
    "AISI1045": aisi1045,
    "AL7075": al7075,
}


def material_from_dict(d: dict) -> MaterialModel:
    """Build a material from a config mapping (``preset`` or explicit ``kind``)."""
    d = dict(d)
    if "preset" in d:
        base = PRESETS[d.pop("preset")]()
        if not d:
            return base
        return material_from_dict({**base.to_dict(), **d})
    kind = d.get("kind")
    edge = dict(K_ue=float(d.get("K_ue_N_per_mm", 0.0)), K_ve=float(d.get("K_ve_N_per_mm", 0.0)))
    if kind == "linear":
        return LinearMaterial(K_uc=float(d["K_uc_MPa"]), K_vc=float(d["K_vc_MPa"]), **edge)
    if kind == "power_law":
        return PowerLawMaterial(c_u=float(d["c_u_MPa"]), p_u=float(d["p_u"]),
                                c_v=float(d["c_v_MPa"]), p_v=float(d["p_v"]), **edge)
    if kind == "ti_shear":
        b, c0, c1 = d.get("beta_a", [0.34, 0.441]), d.get("C0", [0.88, 0.63]), d.get("C1", [0.35, 0.12])
        return TiShearMaterial(tau_s=float(d.get("tau_s_MPa", 613.0)), beta0=b[0], beta1=b[1],
                               c00=c0[0], c01=c0[1], c10=c1[0], c11=c1[1], **edge)
    raise ValueError(f"unknown material kind {kind!r}")


def characteristic(material: MaterialModel, h, alpha_n=0.0, lambda_s=0.0, eta=None):
    """Characteristics ``(f_u, f_v)`` in N/mm and coefficients ``(K_uc, K_vc)`` in MPa.

    ``f_j(h) = K_jc(h) * h + K_je``.
    """
    h = _check_h(h)
    K_uc, K_vc = material.coefficients(h, alpha_n, lambda_s, eta)
    return (K_uc * h + material.K_ue, K_vc * h + material.K_ve), (K_uc, K_vc)


@dataclass(frozen=True)
class WeightProfile:
    """Thickness-wise pressure distribution of one force direction.

    A uniform density ``K_c / (K_c h + K_e)`` over ``(0, h]`` plus a point mass
    ``K_e / (K_c h + K_e)`` at the edge, so the total weight is one.
    """

    K_c: float
    K_e: float
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidChipThickness("uncut chip thickness must be positive")

    @property
    def total(self) -> float:
        return self.K_c * self.h + self.K_e

    def density(self, r):
        r = np.asarray(r, float)
        inside = (r > 0) & (r <= self.h)
        return np.where(inside, self.K_c / self.total, 0.0)

    @property
    def edge_mass(self) -> float:
        return self.K_e / self.total

    def integral(self) -> float:
        """Numerical integral of the density over ``(0, h]`` plus the edge mass."""
        from scipy.integrate import fixed_quad

        # Gauss-Legendre nodes stay strictly inside (0, h), where the density is smooth
        val, _ = fixed_quad(self.density, 0.0, self.h, n=8)
        return float(val) + self.edge_mass


@dataclass(frozen=True, eq=False)
class ForceResult:
    """Resultant on the tool in the machine frame, N; ``F = area_term + edge_term``."""

    area_term: np.ndarray
    edge_term: np.ndarray
    model: str = ""
    n_elements: int = 0
    n_edges: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def F(self) -> np.ndarray:
        return self.area_term + self.edge_term

    @property
    def tangential(self) -> float:
        """Tangential force ``F_t = -F_y``."""
        return -float(self.F[1])


def _fsum_rows(v: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(v[:, k]) for k in range(3)]) if len(v) else np.zeros(3)


def integrate_forces(decomp: ChipDecomposition, material: MaterialModel) -> ForceResult:
    """Sum elementary chip and edge forces, each rotated by its local frame."""
    if decomp.n_elements:
        K_uc, K_vc = material.coefficients(decomp.h, decomp.alpha_n, decomp.lambda_s)
        local = np.column_stack([K_vc, np.zeros_like(K_uc), K_uc]) * decomp.dA[:, None]
        area = _fsum_rows(np.einsum("mij,mj->mi", decomp.T40, local))
    else:
        area = np.zeros(3)
    if decomp.n_edges and (material.K_ue or material.K_ve):
        local = np.array([material.K_ve, 0.0, material.K_ue])[None] * decomp.dL[:, None]
        edge = _fsum_rows(np.einsum("mij,mj->mi", decomp.T40_edge, local))
    else:
        edge = np.zeros(3)
    return ForceResult(area, edge, decomp.model, decomp.n_elements, decomp.n_edges)


def integrate_forces_colwell(model: ColwellModel, material: MaterialModel, tool=None,
                             rake_normal=None) -> ForceResult:
    """Total area and edge length acting along the equivalent chord frame."""
    return integrate_forces(colwell_decomposition(model, tool, rake_normal), material)


# ---------------------------------------------------------------------------
# deflection

REFERENCE_COMPLIANCE = np.array([[0.1405, -0.0172, -0.0834],
                             [-0.0172, 0.0067, 0.0076],
                             [-0.0834, 0.0076, 0.0531]]) * 1e-6


@dataclass(frozen=True)
class ComplianceModel:
    """Static tool-tip compliance ``C`` in m/N."""

    C: np.ndarray = field(default_factory=lambda: REFERENCE_COMPLIANCE.copy())

    def __post_init__(self):
        C = np.asarray(self.C, float)
        if C.shape != (3, 3):
            raise ValueError("compliance must be 3x3")
        scale = np.abs(C).max()
        if scale > 0 and np.abs(C - C.T).max() > 0.05 * scale:
            raise ValueError("compliance matrix is not symmetric within 5%")
        object.__setattr__(self, "C", C)

    def deflection(self, F) -> np.ndarray:
        return self.C @ np.asarray(F, float)


@dataclass(frozen=True)
class DeflectionResult:
    a_eff: float
    F: np.ndarray
    iterations: int
    delta_r: np.ndarray


M_PER_MM = 1e-3


def compensate_deflection(compliance: ComplianceModel, force_of_depth: Callable[[float], np.ndarray],
                          a_nominal: float, tol: float = 1e-9, max_iter: int = 50,
                          fd_step: float = 1e-6) -> DeflectionResult:
    """Solve ``dr = C F(a - dr_x)`` for the tool-tip deflection by Newton iteration.

    Parameters
    ----------
    compliance : ComplianceModel
        ``C`` in m/N.
    force_of_depth : callable
        Maps a depth of cut in mm to the force vector in N.
    a_nominal : float
        Prescribed depth of cut, mm.
    tol : float
        Convergence threshold on the change of ``dr`` between iterations, m.
    fd_step : float
        Finite difference step in metres for the Newton slope.

    Returns
    -------
    DeflectionResult
        ``iterations`` counts force evaluations at the iterates (slope
        evaluations excluded).
    """
    C = compliance.C
    d = 0.0
    dr = np.zeros(3)
    for it in range(1, max_iter + 1):
        F = np.asarray(force_of_depth(a_nominal - d / M_PER_MM), float)
        dr_new = C @ F
        if np.linalg.norm(dr_new - dr) < tol:
            return DeflectionResult(a_nominal - d / M_PER_MM, F, it, dr_new)
        dr = dr_new
        # Newton step on the scalar residual r(d) = d - (C F(a - d))_x
        g = dr_new[0]
        F2 = np.asarray(force_of_depth(a_nominal - (d + fd_step) / M_PER_MM), float)
        slope = ((C @ F2)[0] - g) / fd_step
        denom = 1.0 - slope
        d = g if abs(denom) < 1e-12 else d - (d - g) / denom
    raise NoConvergence(f"deflection loop did not converge in {max_iter} iterations")


def model_error(F_model, F_measured) -> float:
    """Norm of the componentwise relative error.

    Raises
    ------
    ZeroDivisionError
        Naming the components whose measured value is zero.
    """
    F_model = np.asarray(F_model, float)
    F_measured = np.asarray(F_measured, float)
    zero = np.flatnonzero(F_measured == 0)
    if len(zero):
        names = ", ".join("xyz"[k] for k in zero)
        raise ZeroDivisionError(f"measured force component(s) {names} are zero")
    return float(np.sqrt(np.sum(((F_model - F_measured) / F_measured) ** 2)))
