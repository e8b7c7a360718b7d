import math

import numpy as np
import pytest

from parashear import sigmamodel as sm

# frozen: first |e^a sigma(N, c) - N| = 1 crossing for a=1e-4, c=-1e-8,
# from the closed-form root of the quadratic drift
N_GOLDEN_CASE = 16179.530893744539


class TestModels:
    def test_default_values(self):
        m = sm.default_sigma()
        assert m.evaluate(5.0, 0.0) == 5.0
        assert m.evaluate(2.0, 0.1) == pytest.approx(2.4)
        assert m.evaluate(0.0, 0.3) == 0.0

    def test_default_halving_is_exact_quarter(self):
        m = sm.default_sigma()
        s, c = 7.0, 1e-3
        ratio = abs(m.offset(s / 2, c)) / abs(m.offset(s, c))
        assert ratio == pytest.approx(0.25, rel=1e-12)
        assert ratio <= 0.5 - m.gamma + 1e-12

    @pytest.mark.parametrize("name", ["default", "perturbed"])
    def test_axiom_suite(self, name):
        model = sm.get_model(name)
        res = sm.check_axioms(model)
        assert res["scaling"] < 1e-9
        assert res["zero_at_zero"] == 0.0
        assert res["window_stability_margin"] <= 1e-12
        assert res["halving_margin"] <= 1e-12
        assert res["monotone_margin"] <= 1e-12

    def test_perturbed_scaling_exact(self):
        # the perturbation depends only on the product c*s, so scaling is exact
        m = sm.perturbed_sigma()
        for r in (-2.0, 0.5, 3.0):
            lhs = m.evaluate(math.exp(r) * 3.0, math.exp(-r) * 1e-4)
            rhs = math.exp(r) * m.evaluate(3.0, 1e-4)
            assert lhs == pytest.approx(rhs, rel=1e-14)


class TestCrossing:
    def test_pure_curvature_closed_form(self):
        m = sm.default_sigma()
        n, diags = sm.find_crossing_n(m, 0.0, 1e-6, delta_prime=0.1)
        assert n == pytest.approx(1000.0, abs=1e-6)
        assert diags["scaled_offset"] == pytest.approx(1.0, abs=1e-8)
        assert diags["scaled_offset"] <= diags["scaled_offset_bound"]

    def test_frozen_opposed_drift_case(self):
        m = sm.default_sigma()
        n, diags = sm.find_crossing_n(m, 1e-4, -1e-8, delta_prime=0.1)
        assert n == pytest.approx(N_GOLDEN_CASE, rel=1e-8)
        assert abs(diags["r_at_N"] - 1.0) <= 1e-9
        assert n >= 1e4         # N >= 1/|a| in the opposed-drift regime
        assert diags["inverse_a_bound_holds"]

    def test_bisection_matches_dense_scan(self):
        m = sm.default_sigma()
        rng = np.random.default_rng(13)
        for _ in range(10):
            a = rng.choice([-1, 1]) * 10.0 ** rng.uniform(-6, -4.5)
            c = -math.copysign(10.0 ** rng.uniform(-13.5, -13.0), a)
            n, _ = sm.find_crossing_n(m, a, c, delta_prime=5e-3)
            ts = np.linspace(0.0, n * 1.001, 200001)
            r = np.abs(math.exp(a) * (ts + c * ts * ts) - ts)
            first = ts[np.argmax(r >= 1.0)]
            assert n == pytest.approx(first, rel=1e-3)

    def test_range_too_short_rejected(self):
        with pytest.raises(sm.NoCrossing):
            sm.find_crossing_n(sm.default_sigma(), 1e-4, 1e-8, delta_prime=1e-3)

    def test_zero_curvature_rejected(self):
        with pytest.raises(ValueError):
            sm.find_crossing_n(sm.default_sigma(), 1e-4, 0.0)


class TestWitness:
    def test_linear_drift_case(self):
        rep = sm.variable_strong_r_witness(sm.default_sigma(), 1e-3, 0.0, 0.0, 0.1)
        assert rep.M == pytest.approx(1.0 / abs(1.0 - math.exp(1e-3)), rel=1e-12)
        assert rep.residuals["terminal_shift"] == pytest.approx(1.0, abs=1e-9)
        assert rep.passed

    def test_curvature_case_with_windows(self):
        rep = sm.variable_strong_r_witness(sm.default_sigma(), 0.0, 0.0, 1e-13,
                                           0.1, delta_prime=0.5)
        assert rep.windows           # floor below M: window checks ran
        assert rep.passed
        assert rep.residuals["terminal_shift"] == pytest.approx(1.0, abs=1e-8)
        bound = rep.residuals["stability_bound"]
        for w in rep.windows:
            assert w.max_distance <= bound

    def test_inert_coordinate_ignored(self):
        a = sm.variable_strong_r_witness(sm.default_sigma(), 1e-3, 0.0, 0.0, 0.1)
        b = sm.variable_strong_r_witness(sm.default_sigma(), 1e-3, 0.7, 0.0, 0.1)
        assert a.M == b.M
        assert a.residuals == b.residuals

    def test_degenerate_rejected(self):
        with pytest.raises(sm.DegenerateInput):
            sm.variable_strong_r_witness(sm.default_sigma(), 0.0, 0.3, 0.0, 0.1)
