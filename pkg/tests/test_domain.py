import numpy as np
import numpy.testing as npt
import pytest

from fockmodel import fock as fk
from fockmodel.domain import (
    OperatorTuple, build_model, cnc_check, defects, evaluate_series,
    joint_nilpotency_order, membership_check, poisson_kernel, pure_check,
    random_poly, rank_one_identity_check,
)
from fockmodel.freeseries import NcSeries, NcSeriesTuple
from fockmodel.linalg import DEFAULT_TOL, dagger, spectral_norm


def shifted_pair(d):
    # f = (Z1, Z2 + Z1^2)
    f2 = NcSeries.variable(2, d, 2) + NcSeries.monomial(2, d, (1, 1), 1.0)
    return NcSeriesTuple((NcSeries.variable(2, d, 1), f2))


CTX_ID = build_model(NcSeriesTuple.identity(2, 5))
CTX_SH = build_model(shifted_pair(5))


def zero_tuple(n, dim):
    return OperatorTuple(tuple(np.zeros((dim, dim), dtype=complex)
                               for _ in range(n)))


def random_nilpotent(n, dim, seed, scale=0.4):
    rng = np.random.default_rng(seed)
    mats = [np.triu(rng.standard_normal((dim, dim))
                    + 1j * rng.standard_normal((dim, dim)), k=1)
            for _ in range(n)]
    row = np.hstack(mats)
    s = scale / max(spectral_norm(row), 1e-12)
    return OperatorTuple(tuple(s * A for A in mats))


# ---------------------------------------------------------------------------
# universal model matrices
# ---------------------------------------------------------------------------

def test_identity_symbol_gives_creations():
    S = fk.creation_tuple(CTX_ID.fock)
    for i in range(2):
        assert spectral_norm(CTX_ID.MZ[i] - S[i]) <= 1e-14
        assert spectral_norm(CTX_ID.MF[i] - S[i]) <= 1e-14


def test_shifted_pair_coordinate_multiplication():
    # g = (Z1, Z2 - Z1^2), so M_{Z_2} = S_2 - S_1^2
    S = fk.creation_tuple(CTX_SH.fock)
    npt.assert_allclose(CTX_SH.MZ[0], S[0], atol=1e-14)
    npt.assert_allclose(CTX_SH.MZ[1], S[1] - S[0] @ S[0], atol=1e-14)


def test_f_of_model_coordinates_recovers_creations():
    S = fk.creation_tuple(CTX_SH.fock)
    FM = evaluate_series(CTX_SH.f, CTX_SH.MZ)
    for i in range(2):
        assert spectral_norm(FM[i] - S[i]) <= 1e-13


def test_model_tuple_is_pure():
    rep = pure_check(CTX_SH, CTX_SH.model_tuple())
    assert rep.pure
    assert rep.label == "certificate"


def test_right_multiplications_commute_with_model_interior():
    # Lambda_i commutes with M_{Z_j} on low degrees
    P = CTX_SH.interior(CTX_SH.model_margin() + 2).matrix()
    for L in CTX_SH.LAM:
        for M in CTX_SH.MZ:
            assert spectral_norm(P @ (L @ M - M @ L) @ P) <= 1e-12


def test_coordinate_gram_values():
    G = CTX_SH.coordinate_gram()
    npt.assert_allclose(G, [[1.0, 0.0], [0.0, 2.0]], atol=1e-12)


def test_gram_identity_diagonal_interior():
    # <Z_2, Z_2> = 2: the compressed M_{Z_2}^H M_{Z_2} is 2I on the interior
    Q = CTX_SH.interior(CTX_SH.model_margin()).matrix()
    M2 = CTX_SH.MZ[1]
    got = Q @ (dagger(M2) @ M2) @ Q
    npt.assert_allclose(got, 2.0 * Q, atol=1e-12)


# ---------------------------------------------------------------------------
# evaluate_series
# ---------------------------------------------------------------------------

def test_evaluate_identity_returns_input():
    X = random_nilpotent(2, 3, 5)
    out = evaluate_series(CTX_ID.f, X.T)
    for i in range(2):
        npt.assert_allclose(out[i], X[i], atol=1e-14)


def test_evaluate_scalar_quadratic_at_jordan_cell():
    d = 5
    z = NcSeries.variable(1, d, 1)
    f = NcSeriesTuple((z + NcSeries.monomial(1, d, (1, 1), 1.0),))
    J = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    out = evaluate_series(f, (J,))
    npt.assert_allclose(out[0], J + J @ J, atol=1e-14)


def test_evaluate_matches_brute_force_word_sum():
    rng = np.random.default_rng(21)
    X = random_nilpotent(2, 3, 77)
    s = NcSeries.zero(2, 4)
    terms = []
    for _ in range(7):
        k = int(rng.integers(0, 4))
        w = tuple(int(x) for x in rng.integers(1, 3, k))
        c = complex(rng.standard_normal(), rng.standard_normal())
        s = s + NcSeries.monomial(2, 4, w, c)
        terms.append((w, c))
    got = evaluate_series(s, X.T)
    brute = np.zeros((3, 3), dtype=complex)
    for w, c in s.coeffs.items():
        term = np.eye(3, dtype=complex)
        for letter in w:
            term = term @ X[letter - 1]
        brute += c * term
    npt.assert_allclose(got, brute, atol=1e-10)


def test_evaluate_multiplicative_on_nilpotent_input():
    from fockmodel.freeseries import multiply
    X = random_nilpotent(2, 4, 13)
    a = random_poly(2, 5, 2, np.random.default_rng(1))
    b = random_poly(2, 5, 2, np.random.default_rng(2))
    lhs = evaluate_series(multiply(a, b), X.T)
    rhs = evaluate_series(a, X.T) @ evaluate_series(b, X.T)
    # nilpotency order 4 <= degree/2 + 1 keeps the product below truncation
    npt.assert_allclose(lhs, rhs, atol=1e-12)


# ---------------------------------------------------------------------------
# membership / purity / cnc
# ---------------------------------------------------------------------------

def test_membership_zero_tuple():
    rep = membership_check(CTX_SH, zero_tuple(2, 3))
    assert rep.verdict == "inside"
    assert rep.ok and rep.exact
    assert max(rep.residuals) <= 1e-14


def test_membership_identity_symbol_row_contraction():
    rng = np.random.default_rng(3)
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            for _ in range(2)]
    s = 0.6 / spectral_norm(np.hstack(mats))
    X = OperatorTuple(tuple(s * A for A in mats))
    rep = membership_check(CTX_ID, X)
    assert rep.verdict == "inside"
    assert rep.row_norm == pytest.approx(0.6, abs=1e-12)


def test_membership_nilpotent_pair_exact():
    X = random_nilpotent(2, 4, 99)
    rep = membership_check(CTX_SH, X)
    assert rep.exact
    assert max(rep.residuals) <= 1e-12


def test_membership_outside_detected():
    X = OperatorTuple((2.0 * np.eye(2, dtype=complex),
                       np.zeros((2, 2), dtype=complex)))
    rep = membership_check(CTX_ID, X)
    assert rep.verdict == "outside"


def test_pure_zero_tuple():
    rep = pure_check(CTX_SH, zero_tuple(2, 2))
    assert rep.pure and rep.powers[0] == 0.0


def test_pure_truncated_creations():
    X = OperatorTuple(fk.creation_tuple(CTX_ID.fock))
    rep = pure_check(CTX_ID, X)
    assert rep.pure and rep.label == "certificate"


def test_not_pure_scalar_one():
    ctx1 = build_model(NcSeriesTuple.identity(1, 4))
    rep = pure_check(ctx1, OperatorTuple((np.eye(1, dtype=complex),)))
    assert not rep.pure
    assert all(r == pytest.approx(1.0) for r in rep.powers)


def test_cnc_pure_implies_cnc():
    X = random_nilpotent(2, 3, 55)
    rep = cnc_check(CTX_SH, X)
    assert rep.cnc


def test_cnc_scalar_one_fails():
    ctx1 = build_model(NcSeriesTuple.identity(1, 4))
    rep = cnc_check(ctx1, OperatorTuple((np.eye(1, dtype=complex),)))
    assert not rep.cnc


def test_cnc_fixed_subspace_of_partial_isometry():
    # X = diag(1, 1/2): Phi^K(I) -> diag(1, 4^-K), fixed part first coord
    ctx1 = build_model(NcSeriesTuple.identity(1, 4))
    X = OperatorTuple((np.diag([1.0, 0.5]).astype(complex),))
    rep = cnc_check(ctx1, X)
    assert not rep.cnc
    assert rep.fixed_dim == 1


# ---------------------------------------------------------------------------
# defects and the Poisson kernel
# ---------------------------------------------------------------------------

def test_defects_zero_tuple():
    D = defects(CTX_SH, zero_tuple(2, 3))
    npt.assert_allclose(D.delta, np.eye(3), atol=1e-14)
    npt.assert_allclose(D.delta_star, np.eye(6), atol=1e-14)
    assert D.frame_D.dim == 3 and D.frame_Dstar.dim == 6


def test_defects_jordan_cell():
    ctx1 = build_model(NcSeriesTuple.identity(1, 4))
    J = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    D = defects(ctx1, OperatorTuple((J,)))
    npt.assert_allclose(D.delta, np.diag([0.0, 1.0]), atol=1e-14)
    assert D.frame_D.dim == 1
    assert not D.degenerate


def test_defects_coisometry_degenerate():
    # row coisometry: sum X_i X_i^H = I, so delta = 0
    X1 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    X2 = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
    D = defects(CTX_ID, OperatorTuple((X1, X2)))
    npt.assert_allclose(D.delta, 0.0, atol=1e-14)
    assert D.frame_D.dim == 0
    assert D.degenerate


def test_poisson_kernel_zero_tuple_is_vacuum_embedding():
    X = zero_tuple(2, 3)
    K = poisson_kernel(CTX_SH, X)
    assert K.isometry_defect <= 1e-13
    assert K.pure_tail == pytest.approx(0.0, abs=1e-300)
    # K h = e_vacuum (x) h: only the first defect block is nonzero
    npt.assert_allclose(K.K[:3, :], np.eye(3), atol=1e-13)
    npt.assert_allclose(K.K[3:, :], 0.0, atol=1e-13)


def test_poisson_kernel_nilpotent_isometric():
    X = random_nilpotent(2, 4, 7)
    K = poisson_kernel(CTX_SH, X)
    assert K.isometry_defect <= 1e-12
    assert max(K.intertwining) <= 1e-10


def test_poisson_kernel_contraction_defect_bounded_by_tail():
    rng = np.random.default_rng(15)
    mats = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            for _ in range(2)]
    s = 0.5 / spectral_norm(np.hstack(mats))
    X = OperatorTuple(tuple(s * A for A in mats))
    K = poisson_kernel(CTX_ID, X)
    assert K.pure_tail > 0.0
    assert K.isometry_defect <= 10.0 * K.pure_tail + 1e-10


def test_joint_nilpotency_order():
    X = random_nilpotent(2, 4, 31)
    order = joint_nilpotency_order(list(X.T), 10, eps=1e-300)
    assert order is not None and order <= 4
    Y = OperatorTuple((np.eye(2, dtype=complex), np.eye(2, dtype=complex)))
    assert joint_nilpotency_order(list(Y.T), 10, eps=1e-300) is None


# ---------------------------------------------------------------------------
# rank-one identity on the model space
# ---------------------------------------------------------------------------

def test_rank_one_identity_constants():
    one = NcSeries.monomial(2, 5, (), 1.0)
    xi = np.zeros(CTX_SH.dim, dtype=complex)
    xi[0] = 1.0
    assert rank_one_identity_check(CTX_SH, one, one, xi) <= 1e-14


def test_rank_one_identity_single_letters():
    q = NcSeries.variable(2, 5, 1)
    r = NcSeries.variable(2, 5, 2)
    xi = CTX_SH.fock.basis_vector((1,))
    assert rank_one_identity_check(CTX_SH, q, r, xi) <= 1e-13


def test_rank_one_identity_random_sweep():
    rng = np.random.default_rng(47)
    worst = 0.0
    for _ in range(10):
        q = random_poly(2, 5, 2, rng)
        r = random_poly(2, 5, 2, rng)
        xi = rng.standard_normal(CTX_SH.dim) \
            + 1j * rng.standard_normal(CTX_SH.dim)
        worst = max(worst, rank_one_identity_check(CTX_SH, q, r, xi))
    assert worst <= 1e-10


def test_operator_tuple_helpers():
    X = zero_tuple(2, 3)
    assert X.n == 2 and X.dim == 3
    assert X.row_norm() == pytest.approx(0.0)
    assert OperatorTuple.zero(3, 2).n == 3
