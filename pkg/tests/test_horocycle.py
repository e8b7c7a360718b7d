import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parashear import horocycle as ho
from parashear import liealg as la

# frozen from a 40-digit evaluation of the closed forms
CHI_500 = 498.75174820979069
OFFSET_1E3 = -0.10000999683371664
C0_EXPECTED = 1.0 / 32.0


class TestDecompose:
    def test_identity(self):
        c = ho.uxv_decompose(np.eye(2), np.eye(2))
        assert (c.a, c.b, c.c) == (0.0, 0.0, 0.0)

    def test_pure_diagonal(self):
        y = np.diag([math.exp(0.1), math.exp(-0.1)])
        c = ho.uxv_decompose(np.eye(2), y)
        assert c.a == pytest.approx(0.0, abs=1e-15)
        assert c.b == pytest.approx(0.1, abs=1e-13)
        assert c.c == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(-0.05, 0.05), st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip(self, a, b, c):
        x = la.expm(0.2 * la.sl2_triple()[2])
        y = ho.UXVCoords(a, b, c).matrix() @ x
        back = ho.uxv_decompose(x, y)
        assert back.a == pytest.approx(a, abs=1e-12)
        assert back.b == pytest.approx(b, abs=1e-12)
        assert back.c == pytest.approx(c, abs=1e-12)

    def test_out_of_chart(self):
        y = np.array([[0.0, 1.0], [-1.0, 0.0]])   # rotation: m22 = 0
        with pytest.raises(ho.OutOfChart):
            ho.uxv_decompose(np.eye(2), y)


class TestCompensator:
    def test_linear_at_zero_coords(self):
        for t in (0.0, 1.0, -3.5, 100.0):
            assert ho.chi(t, 0.0, 0.0) == t

    def test_zero_time(self):
        assert ho.chi(0.0, 0.3, 0.1) == 0.0

    def test_frozen_value(self):
        assert ho.chi(500.0, 1e-3, 1e-6) == pytest.approx(CHI_500, rel=1e-12)

    def test_offset_is_chi_minus_t(self):
        for t, b, c in [(10.0, 1e-3, 1e-5), (500.0, -2e-4, 0.0), (3.0, 0.0, 1e-4)]:
            assert ho.shear_offset(t, b, c) == pytest.approx(ho.chi(t, b, c) - t,
                                                             abs=1e-12)

    def test_offset_zero_coords(self):
        assert ho.shear_offset(123.0, 0.0, 0.0) == 0.0

    def test_offset_linear_when_c_zero(self):
        b = 1e-3
        slope = math.expm1(-2 * b)
        for t in (1.0, 10.0, 100.0):
            assert ho.shear_offset(t, b, 0.0) == pytest.approx(slope * t, rel=1e-12)

    def test_offset_frozen_value(self):
        assert ho.shear_offset(1e3, 1e-4, -1e-7) == pytest.approx(OFFSET_1E3, rel=1e-12)


class TestExtremalConstant:
    def test_constant_polynomial_upper_bound(self):
        # the constant polynomial 1/4 has sup 1/4, so c0 <= 1/4
        assert ho.solve_extremal_constant(1.0) <= 0.25

    def test_value(self):
        assert ho.solve_extremal_constant(1.0) == pytest.approx(C0_EXPECTED, abs=5e-5)

    def test_scale_invariance(self):
        vals = [ho.solve_extremal_constant(t) for t in (1.0, 10.0, 100.0)]
        assert max(vals) - min(vals) <= 1e-6

    def test_derive_c0(self):
        assert ho.derive_c0([1.0, 10.0, 100.0]) == pytest.approx(C0_EXPECTED, abs=5e-5)

    def test_implication_on_random_polynomials(self):
        rng = np.random.default_rng(11)
        c0 = ho.solve_extremal_constant(1.0)
        for T in (1.0, 50.0):
            b1 = rng.uniform(-1, 1, 10_000)
            b2 = rng.uniform(-1, 1, 10_000) / T
            b3 = rng.uniform(-1, 1, 10_000) / T ** 2
            sup = ho._sup_abs_quadratic(b1, b2, b3, T)
            scale = rng.uniform(0.0, 1.0, 10_000) * c0 / np.maximum(sup, 1e-30)
            b1, b2, b3 = b1 * scale, b2 * scale, b3 * scale
            # all rescaled to sup <= c0: the three coefficient bounds must follow
            assert np.all(np.abs(b1) <= 0.25 + 1e-12)
            assert np.all(np.abs(b2) <= 0.25 / T + 1e-12)
            assert np.all(np.abs(b3) <= 0.25 / T ** 2 + 1e-12)


class TestWitness:
    def test_linear_crossing(self):
        w = ho.strong_r_witness(0.0, 1e-4, 0.0, 0.1)
        expected = ho.solve_extremal_constant(1.0) / abs(math.expm1(-2e-4))
        assert w.M == pytest.approx(expected, rel=1e-10)
        assert w.M <= w.t_max

    def test_quadratic_crossing(self):
        w = ho.strong_r_witness(0.0, 0.0, 1e-6, 0.1)
        assert w.M == pytest.approx(math.sqrt(ho.solve_extremal_constant(1.0) / 1e-6),
                                    rel=1e-10)

    def test_same_orbit_rejected(self):
        with pytest.raises(ValueError):
            ho.strong_r_witness(1e-3, 0.0, 0.0, 0.1)

    def test_large_coordinates_rejected(self):
        with pytest.raises(ValueError):
            ho.strong_r_witness(0.0, 0.5, 0.0, 0.1)

    def test_first_crossing_minimality(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            b = rng.choice([-1, 1]) * 10.0 ** rng.uniform(-7, -4)
            c = rng.choice([-1, 1]) * 10.0 ** rng.uniform(-10, -7)
            w = ho.strong_r_witness(0.0, b, c, 0.1)
            ts = np.linspace(0.0, w.M * 0.999, 4000)
            vals = np.abs([w.p_of_L(t) for t in ts])
            assert vals.max() < w.c0 * (1 + 1e-6)
            assert abs(w.p_of_L(w.M)) == pytest.approx(w.c0, rel=1e-8)

    def test_f1_window_stability(self):
        w = ho.strong_r_witness(0.0, 1e-5, -1e-8, 0.1)
        assert ho.check_f1_window_stability(w, n_t=200, n_s=12) <= 0.1 ** 2

    def test_f1_nonvacuous_case(self):
        # coefficients small enough that the window floor sits below M
        w = ho.strong_r_witness(0.0, 1e-7, -1e-12, 0.1)
        assert w.M > w.kappa ** -2
        assert ho.check_f1_window_stability(w) <= 0.1 ** 2


class TestDivergence:
    def test_zero_coords(self):
        rep, series = ho.verify_horocycle_divergence(
            np.eye(2), ho.UXVCoords(0.0, 0.0, 0.0), np.linspace(1, 100, 50))
        assert max(series["D_comp"]) < 1e-13

    def test_geodesic_offset_case(self):
        t_grid = np.linspace(1.0, 5000.0, 400)
        rep, series = ho.verify_horocycle_divergence(
            np.eye(2), ho.UXVCoords(0.0, 1e-4, 0.0), t_grid)
        assert max(series["D_comp"]) < 1e-2
        assert series["D_raw"][-1] >= 0.5
        assert rep.passed

    def test_opposite_horocycle_offset_case(self):
        t_grid = np.linspace(1.0, 1000.0, 400)
        rep, series = ho.verify_horocycle_divergence(
            np.eye(2), ho.UXVCoords(0.0, 0.0, 1e-6), t_grid)
        assert max(series["D_comp"]) < 1e-2
        assert series["D_raw"][-1] >= 0.5
        assert rep.passed

    def test_raw_tracks_offset(self):
        # the raw divergence is the shear offset, up to the small chart error
        t_grid = np.linspace(100.0, 3000.0, 60)
        _, series = ho.verify_horocycle_divergence(
            np.eye(2), ho.UXVCoords(0.0, 5e-5, 0.0), t_grid)
        for traw, f in zip(series["D_raw"], series["f"]):
            assert traw == pytest.approx(abs(f), rel=2e-2, abs=1e-4)

    def test_base_point_does_not_matter(self):
        x = la.expm(0.3 * la.sl2_triple()[2]) @ la.expm(0.2 * la.sl2_triple()[0])
        t_grid = np.linspace(1.0, 1000.0, 100)
        _, s1 = ho.verify_horocycle_divergence(x, ho.UXVCoords(0, 1e-4, 1e-7), t_grid)
        _, s2 = ho.verify_horocycle_divergence(np.eye(2),
                                               ho.UXVCoords(0, 1e-4, 1e-7), t_grid)
        assert np.allclose(s1["D_comp"], s2["D_comp"], atol=1e-9)
