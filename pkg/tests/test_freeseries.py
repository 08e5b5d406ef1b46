import numpy as np
import pytest

from fockmodel.freeseries import (
    NcSeries, NcSeriesTuple, NonzeroConstantTerm, SingularJacobian,
    all_words, compose, count_words_upto, invert_composition,
    jacobian_at_zero, multiply, property_A_check, radius_diagnostics,
    series_residual, tuple_residual, word_index, words_of_length,
)


def _var(n, d, i):
    return NcSeries.variable(n, d, i)


def _shifted_pair(d, sign=+1):
    # (Z1, Z2 + sign * Z1^2)
    f2 = _var(2, d, 2) + NcSeries.monomial(2, d, (1, 1), float(sign))
    return NcSeriesTuple((_var(2, d, 1), f2))


def _brute_multiply(a, b):
    # word-by-word convolution, no shared code with multiply()
    out = {}
    for wa, ca in a.coeffs.items():
        for wb, cb in b.coeffs.items():
            w = wa + wb
            if len(w) <= a.degree:
                out[w] = out.get(w, 0.0) + ca * cb
    s = NcSeries.zero(a.n, a.degree)
    for w, c in out.items():
        s = s + NcSeries.monomial(a.n, a.degree, w, c)
    return s


# ---------------------------------------------------------------------------
# word bookkeeping
# ---------------------------------------------------------------------------

def test_word_enumeration_counts():
    assert len(list(words_of_length(2, 3))) == 8
    assert count_words_upto(2, 3) == 1 + 2 + 4 + 8
    assert count_words_upto(3, 2) == 1 + 3 + 9
    ws = list(all_words(2, 2))
    assert ws[0] == ()
    assert len(ws) == 7


def test_word_index_graded_lex():
    # graded order: () first, then single letters, then pairs
    assert word_index((), 2) == 0
    assert word_index((1,), 2) == 1
    assert word_index((2,), 2) == 2
    assert word_index((1, 1), 2) == 3


# ---------------------------------------------------------------------------
# multiply
# ---------------------------------------------------------------------------

def test_multiply_is_noncommutative():
    d = 4
    z1z2 = multiply(_var(2, d, 1), _var(2, d, 2))
    z2z1 = multiply(_var(2, d, 2), _var(2, d, 1))
    assert z1z2.coeff((1, 2)) == pytest.approx(1.0)
    assert z1z2.coeff((2, 1)) == pytest.approx(0.0)
    assert series_residual(z1z2, z2z1) >= 1.0


def test_multiply_binomial_identity():
    d = 5
    one = NcSeries.monomial(1, d, (), 1.0)
    z = _var(1, d, 1)
    prod = multiply(one + z, one - z)
    target = one - multiply(z, z)
    assert series_residual(prod, target) <= 1e-14


def test_multiply_matches_brute_convolution():
    rng = np.random.default_rng(7)
    d = 4
    for _ in range(5):
        a = NcSeries.zero(2, d)
        b = NcSeries.zero(2, d)
        for _ in range(6):
            wa = tuple(int(x) for x in rng.integers(1, 3, rng.integers(0, 3)))
            wb = tuple(int(x) for x in rng.integers(1, 3, rng.integers(0, 3)))
            a = a + NcSeries.monomial(2, d, wa, complex(rng.standard_normal(),
                                                        rng.standard_normal()))
            b = b + NcSeries.monomial(2, d, wb, complex(rng.standard_normal(),
                                                        rng.standard_normal()))
        assert series_residual(multiply(a, b), _brute_multiply(a, b)) <= 1e-12


def test_multiply_associative_and_distributive():
    rng = np.random.default_rng(13)
    d = 4

    def rand_series():
        s = NcSeries.zero(2, d)
        for _ in range(5):
            w = tuple(int(x) for x in rng.integers(1, 3, rng.integers(0, 3)))
            s = s + NcSeries.monomial(2, d, w, complex(rng.standard_normal(),
                                                       rng.standard_normal()))
        return s

    for _ in range(4):
        a, b, c = rand_series(), rand_series(), rand_series()
        assert series_residual(multiply(multiply(a, b), c),
                               multiply(a, multiply(b, c))) <= 1e-11
        assert series_residual(multiply(a, b + c),
                               multiply(a, b) + multiply(a, c)) <= 1e-11


# ---------------------------------------------------------------------------
# compose
# ---------------------------------------------------------------------------

def test_compose_with_identity():
    d = 5
    F = _shifted_pair(d)
    idt = NcSeriesTuple.identity(2, d)
    assert tuple_residual(compose(F, idt), F) <= 1e-14
    assert tuple_residual(compose(idt, F), F) <= 1e-14


def test_compose_triangular_pair_cancels():
    d = 5
    F = _shifted_pair(d, +1)
    G = _shifted_pair(d, -1)
    idt = NcSeriesTuple.identity(2, d)
    assert tuple_residual(compose(F, G), idt) <= 1e-14
    assert tuple_residual(compose(G, F), idt) <= 1e-14


def test_compose_scalar_quadratic_inverse_degree4():
    # (z + z^2) o (z - z^2 + 2 z^3 - 5 z^4) = z through degree 4
    d = 4
    z = _var(1, d, 1)
    f = NcSeriesTuple((z + NcSeries.monomial(1, d, (1, 1), 1.0),))
    g = NcSeriesTuple((z
                       + NcSeries.monomial(1, d, (1, 1), -1.0)
                       + NcSeries.monomial(1, d, (1, 1, 1), 2.0)
                       + NcSeries.monomial(1, d, (1, 1, 1, 1), -5.0),))
    assert tuple_residual(compose(f, g), NcSeriesTuple.identity(1, d)) <= 1e-12


def test_compose_requires_vanishing_constant_term():
    d = 3
    g_bad = NcSeriesTuple((NcSeries.monomial(1, d, (), 1.0) + _var(1, d, 1),))
    f = NcSeriesTuple((_var(1, d, 1),))
    with pytest.raises(Exception):
        compose(f, g_bad)


def test_compose_associativity_random():
    rng = np.random.default_rng(19)
    d = 4

    def rand_tuple():
        comps = []
        for i in range(2):
            s = _var(2, d, i + 1)
            for _ in range(3):
                k = int(rng.integers(1, 3))
                w = tuple(int(x) for x in rng.integers(1, 3, k))
                s = s + NcSeries.monomial(
                    2, d, w, 0.3 * complex(rng.standard_normal(),
                                           rng.standard_normal()))
            comps.append(s)
        return NcSeriesTuple(tuple(comps))

    for _ in range(3):
        F, G, H = rand_tuple(), rand_tuple(), rand_tuple()
        lhs = compose(compose(F, G), H)
        rhs = compose(F, compose(G, H))
        assert tuple_residual(lhs, rhs) <= 1e-10


# ---------------------------------------------------------------------------
# jacobian
# ---------------------------------------------------------------------------

def test_jacobian_triangular_pair():
    J, det = jacobian_at_zero(_shifted_pair(5))
    np.testing.assert_allclose(J, np.eye(2), atol=1e-14)
    assert det == pytest.approx(1.0)


def test_jacobian_linear_mixing():
    d = 3
    f1 = _var(2, d, 1).scale(2.0) + _var(2, d, 2)
    f2 = _var(2, d, 2)
    J, det = jacobian_at_zero(NcSeriesTuple((f1, f2)))
    np.testing.assert_allclose(J, [[2.0, 1.0], [0.0, 1.0]], atol=1e-14)
    assert det == pytest.approx(2.0)


def test_jacobian_multiplicative_under_composition():
    rng = np.random.default_rng(29)
    d = 4
    for _ in range(4):
        A = rng.standard_normal((2, 2)) + np.eye(2)
        B = rng.standard_normal((2, 2)) + np.eye(2)

        def linear_tuple(M):
            comps = []
            for i in range(2):
                s = _var(2, d, 1).scale(M[i, 0]) + _var(2, d, 2).scale(M[i, 1])
                s = s + NcSeries.monomial(2, d, (1, 2), 0.1)
                comps.append(s)
            return NcSeriesTuple(tuple(comps))

        F, G = linear_tuple(A), linear_tuple(B)
        JF, dF = jacobian_at_zero(F)
        JG, dG = jacobian_at_zero(G)
        JC, dC = jacobian_at_zero(compose(F, G))
        np.testing.assert_allclose(JC, JF @ JG, atol=1e-10)
        assert dC == pytest.approx(dF * dG, abs=1e-10)


# ---------------------------------------------------------------------------
# invert_composition
# ---------------------------------------------------------------------------

def test_invert_identity():
    idt = NcSeriesTuple.identity(2, 4)
    assert tuple_residual(invert_composition(idt), idt) <= 1e-14


def test_invert_triangular_pair():
    d = 5
    g = invert_composition(_shifted_pair(d, +1))
    assert tuple_residual(g, _shifted_pair(d, -1)) <= 1e-12


def test_invert_scalar_quadratic_signed_catalan():
    # inverse of z + z^2: coefficients are signed Catalan numbers
    d = 5
    z = _var(1, d, 1)
    f = NcSeriesTuple((z + NcSeries.monomial(1, d, (1, 1), 1.0),))
    g = invert_composition(f)
    expected = {1: 1.0, 2: -1.0, 3: 2.0, 4: -5.0, 5: 14.0}
    for k, c in expected.items():
        assert g[0].coeff((1,) * k) == pytest.approx(c, abs=1e-10)


def test_invert_roundtrip_random_sweep():
    rng = np.random.default_rng(31)
    for trial in range(6):
        n = 2 if trial % 2 == 0 else 3
        d = 4
        comps = []
        for i in range(n):
            s = _var(n, d, i + 1)
            for _ in range(3):
                k = int(rng.integers(2, d + 1))
                w = tuple(int(x) for x in rng.integers(1, n + 1, k))
                s = s + NcSeries.monomial(
                    n, d, w, 0.4 * complex(rng.standard_normal(),
                                           rng.standard_normal()))
            comps.append(s)
        F = NcSeriesTuple(tuple(comps))
        G = invert_composition(F)
        idt = NcSeriesTuple.identity(n, d)
        assert tuple_residual(compose(F, G), idt) <= 1e-12
        assert tuple_residual(compose(G, F), idt) <= 1e-12


def test_invert_rejects_singular_jacobian():
    d = 4
    F = NcSeriesTuple((NcSeries.monomial(2, d, (1, 1), 1.0), _var(2, d, 2)))
    with pytest.raises(SingularJacobian):
        invert_composition(F)


def test_invert_rejects_constant_term():
    d = 3
    F = NcSeriesTuple((NcSeries.monomial(1, d, (), 1.0) + _var(1, d, 1),))
    with pytest.raises(NonzeroConstantTerm):
        invert_composition(F)


# ---------------------------------------------------------------------------
# property (A)
# ---------------------------------------------------------------------------

def test_property_A_triangular_pair():
    assert property_A_check(_shifted_pair(5)) is True


def test_property_A_singular_jacobian_is_false():
    d = 4
    F = NcSeriesTuple((NcSeries.monomial(2, d, (1, 1), 1.0), _var(2, d, 2)))
    assert property_A_check(F) is False


def test_property_A_identity():
    assert property_A_check(NcSeriesTuple.identity(2, 4)) is True


def test_property_A_needs_working_degree():
    # degree must be at least twice the generator degree
    with pytest.raises(ValueError):
        property_A_check(_shifted_pair(3))


def test_property_A_scalar_quadratic_is_false():
    # z + z^2 has the non-polynomial Catalan inverse
    d = 6
    z = _var(1, d, 1)
    f = NcSeriesTuple((z + NcSeries.monomial(1, d, (1, 1), 1.0),))
    assert property_A_check(f) is False


# ---------------------------------------------------------------------------
# radius diagnostics
# ---------------------------------------------------------------------------

def test_radius_identity():
    rep = radius_diagnostics(NcSeriesTuple.identity(2, 4))
    s = rep.per_component[0]
    assert s[1] == pytest.approx(1.0)
    assert max(s[2:]) == pytest.approx(0.0)
    assert rep.proxy == pytest.approx(1.0)


def test_radius_scalar_quadratic():
    d = 4
    z = _var(1, d, 1)
    f = NcSeriesTuple((z + NcSeries.monomial(1, d, (1, 1), 1.0),))
    s = radius_diagnostics(f).per_component[0]
    assert s[1] == pytest.approx(1.0)
    assert s[2] == pytest.approx(1.0)


def test_radius_geometric_series_proxy():
    # sum_k 2^{-k} z^k: growth proxy settles near 1/2
    d = 8
    s = NcSeries.zero(1, d)
    for k in range(1, d + 1):
        s = s + NcSeries.monomial(1, d, (1,) * k, 2.0 ** (-k))
    rep = radius_diagnostics(NcSeriesTuple((s,)))
    assert rep.proxy <= 0.5 + 1e-9
    assert rep.proxy >= 0.45
