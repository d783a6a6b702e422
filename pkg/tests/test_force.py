import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvedchip.chipflow import ChipDecomposition, colwell_model
from curvedchip.errors import InvalidChipThickness, NoConvergence
from curvedchip.force import (REFERENCE_COMPLIANCE, ComplianceModel, LinearMaterial, PowerLawMaterial,
                              TiShearMaterial, WeightProfile, aisi1045, al7075, characteristic,
                              compensate_deflection, integrate_forces, integrate_forces_colwell,
                              material_from_dict, model_error, ti6al4v)
from curvedchip.geometry import ProcessParams, ToolGeometry, rectangle_region
from curvedchip.simulate import predict_region, predict_turning, turning_force_of_depth


def ti_scalar(h, alpha_n=0.0, lam=0.0, eta=None):
    """Material chain evaluated one number at a time with the math module."""
    eta = lam if eta is None else eta
    beta_a = 0.34 + 0.441 * alpha_n
    rc = (0.88 + 0.63 * alpha_n) * h ** (0.35 + 0.12 * alpha_n)
    phi_n = math.atan(rc * math.cos(alpha_n) / (1 - rc * math.sin(alpha_n)))
    beta_n = math.atan(math.tan(beta_a) * math.cos(eta))
    t2 = (math.tan(eta) * math.sin(beta_n)) ** 2
    c = 613.0 * math.sqrt(1 + t2) / (math.cos(lam) * math.sin(phi_n)
                                     * math.sqrt(math.cos(phi_n + beta_n - alpha_n) ** 2 + t2))
    return c * math.sin(beta_a), c * math.cos(beta_a)


class TestMaterials:
    def test_power_law_values(self):
        K_uc, K_vc = aisi1045().coefficients(0.1)
        assert K_uc == pytest.approx(2365, rel=1e-3)
        assert K_vc == pytest.approx(2915, rel=1e-3)

    def test_ti_reference_point(self):
        m = ti6al4v()
        rc = 0.88 * 0.1 ** 0.35
        assert rc == pytest.approx(0.3931, abs=1e-4)
        assert math.degrees(float(m.shear_angle(0.1))) == pytest.approx(21.46, abs=0.01)
        K_uc, K_vc = m.coefficients(0.1)
        assert K_uc == pytest.approx(740, rel=5e-3)
        assert K_vc == pytest.approx(2090, rel=5e-3)

    @pytest.mark.parametrize("h", [0.05, 0.1, 0.2])
    @pytest.mark.parametrize("alpha,lam", [(0.0, 0.0), (-0.13, 0.09), (0.1, -0.2)])
    def test_ti_matches_scalar_chain(self, h, alpha, lam):
        got = ti6al4v().coefficients(np.array([h]), alpha, lam)
        ref = ti_scalar(h, alpha, lam)
        for g, r in zip(got, ref):
            assert float(g[0]) == pytest.approx(r, rel=1e-12)

    @given(st.floats(0.01, 0.5), st.floats(-0.3, 0.3))
    @settings(max_examples=50)
    def test_orthogonal_is_merchant(self, h, alpha):
        # resultant over the shear plane, split into rake-face friction and normal parts
        m = ti6al4v()
        phi = float(m.shear_angle(h, alpha))
        beta = 0.34 + 0.441 * alpha
        R = 613.0 / (math.sin(phi) * math.cos(phi + beta - alpha))
        K_uc, K_vc = m.coefficients(h, alpha, 0.0)
        assert math.hypot(K_uc, K_vc) == pytest.approx(R, rel=1e-12)
        assert K_uc / K_vc == pytest.approx(math.tan(beta), rel=1e-12)

    def test_characteristic(self):
        (f_u, f_v), (K_uc, K_vc) = characteristic(al7075(), 0.2)
        assert f_u == pytest.approx(229 * 0.2 + 87)
        assert f_v == pytest.approx(856 * 0.2 + 15)

    @pytest.mark.parametrize("h", [0.0, -0.1, float("nan")])
    def test_bad_thickness(self, h):
        with pytest.raises(InvalidChipThickness):
            ti6al4v().coefficients(h)

    @pytest.mark.parametrize("kw", [dict(tau_s=0.0), dict(c00=-1.0)])
    def test_invalid_ti(self, kw):
        with pytest.raises(ValueError):
            TiShearMaterial(**kw)

    @pytest.mark.parametrize("make", [ti6al4v, aisi1045, al7075])
    def test_dict_round_trip(self, make):
        m = make()
        back = material_from_dict(m.to_dict())
        h = np.array([0.03, 0.1, 0.3])
        for a, b in zip(m.coefficients(h), back.coefficients(h)):
            assert np.allclose(a, b)
        assert (back.K_ue, back.K_ve) == (m.K_ue, m.K_ve)

    def test_preset_override(self):
        m = material_from_dict({"preset": "AL7075", "K_ue_N_per_mm": 0.0})
        assert isinstance(m, LinearMaterial) and m.K_ue == 0.0 and m.K_uc == 229.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            material_from_dict({"kind": "magic"})


class TestWeightProfile:
    @given(st.floats(1e-3, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_normalized(self, h):
        (K_uc, K_vc) = ti6al4v().coefficients(h)
        for K_c, K_e in ((float(K_uc), 32.34), (float(K_vc), 4.6)):
            assert abs(WeightProfile(K_c, K_e, h).integral() - 1.0) < 1e-12

    def test_no_edge_mass(self):
        w = WeightProfile(1000.0, 0.0, 0.1)
        assert w.edge_mass == 0.0
        assert w.density(0.05) == pytest.approx(10.0)
        assert w.density(0.2) == 0.0

    def test_rejects_zero(self):
        with pytest.raises(InvalidChipThickness):
            WeightProfile(1.0, 1.0, 0.0)


class TestIntegration:
    def test_empty(self):
        r = integrate_forces(ChipDecomposition.empty(), ti6al4v())
        assert np.array_equal(r.F, np.zeros(3))

    def test_split(self):
        r = predict_region(rectangle_region(2.0, 0.1), ti6al4v(), "colwell").force
        assert np.array_equal(r.F, r.area_term + r.edge_term)
        assert r.tangential == -r.F[1]

    @pytest.mark.parametrize("model", ["curved", "colwell", "young"])
    def test_ridge_closed_form(self, model):
        b, h = 2.0, 0.1
        F = predict_region(rectangle_region(b, h), ti6al4v(), model, mesh_size=h / 10).F
        (f_u, f_v), _ = characteristic(ti6al4v(), h)
        assert F[1] == pytest.approx(-b * float(f_v), rel=0.01)
        assert F[2] == pytest.approx(b * float(f_u), rel=0.01)
        assert abs(F[0]) < 0.005 * np.linalg.norm(F)
        # order of magnitude of the published example
        assert F[1] == pytest.approx(-427, rel=0.02)

    def test_colwell_wrapper(self, vtool_region):
        r = vtool_region(0.5)
        a = integrate_forces_colwell(colwell_model(r), al7075()).F
        b = predict_region(r, al7075(), "colwell").F
        assert np.allclose(a, b)

    def test_colwell_vanishing_area(self):
        m = LinearMaterial(K_uc=500, K_vc=1000)
        F = [np.linalg.norm(predict_region(rectangle_region(1.0, h), m, "colwell").F) for h in (1e-2, 1e-3)]
        assert F[1] == pytest.approx(F[0] / 10, rel=1e-9)

    def test_linear_in_thickness(self):
        # fixed strips: scaling every h by s scales the force by s when K_e = 0
        m = LinearMaterial(K_uc=300, K_vc=900)
        F1 = predict_region(rectangle_region(1.0, 0.05), m, "young").F
        F2 = predict_region(rectangle_region(1.0, 0.15), m, "young").F
        assert np.allclose(F2, 3 * F1, rtol=1e-9, atol=1e-12)

    def test_fy_monotone_in_feed(self, vtool):
        from curvedchip.geometry import max_feed
        fm = max_feed(vtool, 1.0)
        for model in ("colwell", "young"):
            Fy = [predict_turning(vtool, ProcessParams(feed=q * fm, depth=1.0), aisi1045(), model).F[1]
                  for q in np.linspace(0.1, 1.0, 6)]
            assert np.all(np.diff(np.abs(Fy)) >= 0)

    def test_summation_order_independent(self, vtool_region, rng):
        from curvedchip.simulate import decompose
        d, _, _ = decompose(vtool_region(0.6), "curved", mesh_size=0.03)
        p = rng.permutation(d.n_elements)
        shuffled = ChipDecomposition(d.model, d.h[p], d.dA[p], d.alpha_n[p], d.lambda_s[p], d.T40[p],
                                     d.dL[::-1], d.T40_edge[::-1])
        a, b = integrate_forces(d, ti6al4v()).F, integrate_forces(shuffled, ti6al4v()).F
        assert np.allclose(a, b, rtol=1e-12, atol=0)


@pytest.fixture(scope="module")
def ti_cut():
    """Orthogonal TCMW16T304 insert in Ti6Al4V, a = 1 mm, f = 0.1 mm, measured holder compliance."""
    tool = ToolGeometry.from_degrees(90, 60, 0.4)
    F = turning_force_of_depth(tool, 0.1, ti6al4v(), "curved")
    return F, compensate_deflection(ComplianceModel(), F, 1.0)


class TestDeflection:
    def test_rigid(self):
        res = compensate_deflection(ComplianceModel(np.zeros((3, 3))), lambda a: np.array([a, -2 * a, a]), 1.0)
        assert res.iterations == 1 and res.a_eff == 1.0

    @pytest.mark.parametrize("k,cxx", [(100.0, 1e-6), (400.0, 2e-6), (50.0, 1e-7)])
    def test_linear_fixed_point(self, k, cxx):
        C = np.diag([cxx, 1e-7, 1e-7])
        a = 1.0
        res = compensate_deflection(ComplianceModel(C), lambda d: np.array([k * d, 0.0, 0.0]), a)
        # dr = cxx k (a - dr/1e-3) with dr in m and a in mm
        exact = cxx * k * a / (1 + cxx * k / 1e-3)
        assert res.delta_r[0] == pytest.approx(exact, abs=1e-9)
        assert res.a_eff == pytest.approx(a - exact / 1e-3, abs=1e-6)

    def test_full_matrix_fixed_point(self):
        u = np.array([0.3, -1.0, 0.5])
        k = 300.0
        C = ComplianceModel()
        res = compensate_deflection(C, lambda d: k * d * u, 1.0)
        c = (REFERENCE_COMPLIANCE @ u)[0]
        exact = c * k / (1 + c * k / 1e-3)
        assert res.delta_r[0] == pytest.approx(exact, abs=1e-12)
        assert np.allclose(res.delta_r, REFERENCE_COMPLIANCE @ res.F, atol=1e-9)

    def test_no_convergence(self):
        noise = np.random.default_rng(1)
        with pytest.raises(NoConvergence):
            compensate_deflection(ComplianceModel(np.eye(3) * 1e-6),
                                  lambda a: noise.normal(size=3) * 1e3, 1.0, max_iter=5)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            ComplianceModel(np.array([[1, 0.5, 0], [0, 1, 0], [0, 0, 1.0]]))

    def test_ti_cut_converges_quickly(self, ti_cut):
        _, res = ti_cut
        assert res.iterations <= 10
        assert np.allclose(res.delta_r, REFERENCE_COMPLIANCE @ res.F, atol=1e-9)

    def test_ti_cut_force_change_band(self, ti_cut):
        F, res = ti_cut
        F0 = F(1.0)
        change = np.linalg.norm(res.F - F0) / np.linalg.norm(F0)
        assert 0.02 <= change <= 0.15, f"force change {change:.4%}"


class TestModelError:
    def test_zero(self):
        assert model_error([1, 2, 3], [1, 2, 3]) == 0.0

    def test_one_component(self):
        assert model_error([1.1, 2, 3], [1, 2, 3]) == pytest.approx(0.1)

    def test_all_components(self):
        assert model_error([1.1, -2.2, 3.3], [1, -2, 3]) == pytest.approx(0.17321, abs=1e-5)

    def test_zero_measured(self):
        with pytest.raises(ZeroDivisionError, match="x, z"):
            model_error([1, 2, 3], [0, 2, 0])
