import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parashear import liealg as la

U, X, V = la.sl2_triple()


def small_matrix(dim=3):
    return st.lists(st.floats(-2.0, 2.0), min_size=dim * dim, max_size=dim * dim) \
        .map(lambda vals: np.array(vals).reshape(dim, dim))


class TestBracket:
    def test_sl2_relations(self):
        assert np.allclose(la.bracket(X, U), 2 * U)
        assert np.allclose(la.bracket(X, V), -2 * V)
        # direct 2x2 multiplication oracle for [U, V]
        assert np.allclose(U @ V - V @ U, X)
        assert np.allclose(la.bracket(U, V), X)

    @given(small_matrix())
    @settings(max_examples=40, deadline=None)
    def test_self_bracket_vanishes(self, a):
        assert np.allclose(la.bracket(a, a), 0.0)

    @given(small_matrix(), small_matrix(), small_matrix())
    @settings(max_examples=40, deadline=None)
    def test_jacobi_identity(self, a, b, c):
        total = (la.bracket(a, la.bracket(b, c))
                 + la.bracket(b, la.bracket(c, a))
                 + la.bracket(c, la.bracket(a, b)))
        scale = max(1.0, la.frobenius(a) * la.frobenius(b) * la.frobenius(c))
        assert la.frobenius(total) < 1e-10 * scale

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            la.bracket(U, np.eye(3))

    def test_nonfinite_rejected(self):
        bad = np.array([[0.0, np.inf], [0.0, 0.0]])
        with pytest.raises(ValueError):
            la.bracket(bad, U)


class TestNilpotency:
    def test_sl2_generator(self):
        # iterate ad_U on the basis: V -> X -> -2U -> 0
        assert la.nilpotency_degree(U, la.sl2_basis()) == 3

    def test_zero_matrix(self):
        assert la.nilpotency_degree(np.zeros((2, 2)), la.sl2_basis()) == 1

    def test_semisimple_is_not_nilpotent(self):
        assert la.nilpotency_degree(X, la.sl2_basis()) is None

    def test_dependent_basis_rejected(self):
        with pytest.raises(ValueError):
            la.nilpotency_degree(U, [U, X, 2 * X])


class TestChainBasis:
    def test_sl2_single_chain(self):
        cb = la.chain_basis(U, la.sl2_basis())
        assert cb.lengths == (3,)

    def test_block_generator_trivial_chains(self):
        w = np.zeros((4, 4))
        w[:2, :2] = U
        cb = la.chain_basis(w, la.sl2sl2_basis())
        assert cb.lengths == (3, 1, 1, 1)

    def test_sl3_regular(self):
        cb = la.chain_basis(la.sl3_regular_nilpotent(), la.sl3_basis())
        assert cb.lengths == (5, 3)

    def test_lengths_match_rank_oracle(self):
        # brute-force Jordan structure from ranks of adjoint powers
        for w, basis in [
            (U, la.sl2_basis()),
            (la.sl2sl2_generator(), la.sl2sl2_basis()),
            (la.sl3_regular_nilpotent(), la.sl3_basis()),
        ]:
            cb = la.chain_basis(w, basis)
            assert cb.lengths == la.jordan_lengths(w, basis)

    def test_residual_replay(self):
        cb = la.chain_basis(la.sl3_regular_nilpotent(), la.sl3_basis())
        res = la.chain_residuals(cb)
        assert res["bracket"] < 1e-10
        assert res["sigma_min"] > 1e-8

    def test_non_nilpotent_rejected(self):
        with pytest.raises(la.NotNilpotent):
            la.chain_basis(X, la.sl2_basis())


class TestGrInvariant:
    @pytest.mark.parametrize("w_basis,expected", [
        ("sl2", 3), ("sl2sl2", 6), ("sl3", 13), ("block", 3),
    ])
    def test_canonical_values(self, w_basis, expected):
        if w_basis == "sl2":
            w, basis = U, la.sl2_basis()
        elif w_basis == "sl2sl2":
            w, basis = la.sl2sl2_generator(), la.sl2sl2_basis()
        elif w_basis == "sl3":
            w, basis = la.sl3_regular_nilpotent(), la.sl3_basis()
        else:
            w = np.zeros((4, 4))
            w[:2, :2] = U
            basis = la.sl2sl2_basis()
        assert la.gr_invariant(la.chain_basis(w, basis)) == expected

    def test_conjugation_invariance(self):
        rng = np.random.default_rng(42)
        basis = la.sl3_basis()
        w = la.sl3_regular_nilpotent()
        reference = la.chain_basis(w, basis).lengths
        for _ in range(5):
            b = sum(rng.uniform(-1, 1) * m for m in basis)
            b *= 1.0 / max(1.0, la.frobenius(b))
            g = la.expm(b)
            w2 = g @ w @ np.linalg.inv(g)
            cb2 = la.chain_basis(w2, basis)
            assert cb2.lengths == reference
            assert la.gr_invariant(cb2) == 13


class TestExpm:
    def test_nilpotent_exact(self):
        for t in (0.3, 5.0, 1e7):
            assert np.allclose(la.expm(t * U), [[1.0, t], [0.0, 1.0]])

    def test_diagonal(self):
        b = 0.7
        assert np.allclose(la.expm(b * X), np.diag([np.exp(b), np.exp(-b)]))

    def test_against_series_oracle(self):
        a = 0.3 * V + 0.2 * X
        e = la.expm(a)
        assert la.frobenius(e - la.expm_series(a, 256)) < 1e-13
        assert abs(np.linalg.det(e) - 1.0) < 1e-12

    def test_inverse_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = rng.normal(size=(3, 3))
            prod = la.expm(a) @ la.expm(-a)
            assert la.frobenius(prod - np.eye(3)) < 1e-12

    def test_group_law_on_commuting(self):
        w = 0.4 * X + 0.1 * U
        for s, t in [(0.5, 0.25), (3.0, -1.0), (8.0, 2.0)]:
            lhs = la.expm(s * w) @ la.expm(t * w)
            rhs = la.expm((s + t) * w)
            assert la.frobenius(lhs - rhs) < 1e-10

    def test_det_equals_exp_trace(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            det = np.linalg.det(la.expm(a))
            assert det == pytest.approx(np.exp(np.trace(a)), rel=1e-10)

    def test_cap_on_non_nilpotent(self):
        with pytest.raises(la.ExpmOverflow):
            la.expm(40.0 * X)

    def test_cap_ignores_nilpotent(self):
        out = la.expm(1e7 * U)
        assert out[0, 1] == 1e7


class TestSerialization:
    def test_matrix_roundtrip(self):
        m = np.array([[1.5, -2.0], [0.25, 3.0]])
        assert np.array_equal(la.matrix_from_json(la.matrix_to_json(m)), m)

    def test_chain_basis_roundtrip(self):
        cb = la.chain_basis(la.sl2sl2_generator(), la.sl2sl2_basis())
        back = la.chain_basis_from_json(la.chain_basis_to_json(cb))
        assert back.lengths == cb.lengths
        assert la.gr_invariant(back) == la.gr_invariant(cb)
        assert back.residuals["bracket"] == pytest.approx(cb.residuals["bracket"])
