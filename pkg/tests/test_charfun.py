import numpy as np
import numpy.testing as npt
import pytest

from fockmodel import fock as fk
from fockmodel.charfun import (
    NonCommutingTuple, PointOutsideDomain, characteristic_function,
    coincide, commutative_char_at_point, commutativity_defect,
    constrained_characteristic_function, fundamental_identity_check,
    isometry_iff_pure_check, multi_analyticity_check,
    purely_contractive_check, witnesses_from_unitary,
)
from fockmodel.domain import (
    OperatorTuple, build_model, defects, poisson_kernel, pure_check,
)
from fockmodel.freeseries import NcSeries, NcSeriesTuple
from fockmodel.linalg import dagger, spectral_norm
from fockmodel.variety import build_variety, commutator_ideal


def shifted_pair(d):
    f2 = NcSeries.variable(2, d, 2) + NcSeries.monomial(2, d, (1, 1), 1.0)
    return NcSeriesTuple((NcSeries.variable(2, d, 1), f2))


CTX1 = build_model(NcSeriesTuple.identity(1, 6))
CTX2 = build_model(NcSeriesTuple.identity(2, 5))
CTX_SH = build_model(shifted_pair(5))

JORDAN2 = OperatorTuple((np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),))


def zero_tuple(n, dim):
    return OperatorTuple(tuple(np.zeros((dim, dim), dtype=complex)
                               for _ in range(n)))


def random_nilpotent(n, dim, seed, scale=0.4):
    rng = np.random.default_rng(seed)
    mats = [np.triu(rng.standard_normal((dim, dim))
                    + 1j * rng.standard_normal((dim, dim)), k=1)
            for _ in range(n)]
    s = scale / max(spectral_norm(np.hstack(mats)), 1e-12)
    return OperatorTuple(tuple(s * A for A in mats))


# ---------------------------------------------------------------------------
# assembly on reference points
# ---------------------------------------------------------------------------

def test_single_variable_zero_point_is_the_shift():
    th = characteristic_function(CTX1, zero_tuple(1, 1))
    S = fk.creation_tuple(CTX1.fock)[0]
    assert th.theta.shape == (CTX1.dim, CTX1.dim)
    npt.assert_allclose(th.theta, S, atol=1e-13)


def test_single_variable_jordan_cell_is_coordinate_squared():
    # 2x2 nilpotent Jordan cell: both defects are lines and the symbol is z^2
    th = characteristic_function(CTX1, JORDAN2)
    S = fk.creation_tuple(CTX1.fock)[0]
    assert th.defect_dim == 1 and th.dstar_dim == 1
    npt.assert_allclose(th.theta, S @ S, atol=1e-12)
    # isometric below the top two degrees, zero on them
    G = dagger(th.theta) @ th.theta
    w = np.sort(np.linalg.eigvalsh(G))
    npt.assert_allclose(w[:2], 0.0, atol=1e-12)
    npt.assert_allclose(w[2:], 1.0, atol=1e-12)


def test_zero_tuple_row_of_right_multiplications():
    # X = 0: Theta is the interleaved row of the right f-multiplications
    X = zero_tuple(2, 1)
    th = characteristic_function(CTX_SH, X)
    F = CTX_SH.dim
    assert th.theta.shape == (F, 2 * F)
    expected = np.zeros((F, 2 * F), dtype=complex)
    for b in range(F):
        for i in range(2):
            expected[:, 2 * b + i] = CTX_SH.LAM[i][:, b]
    npt.assert_allclose(th.theta, expected, atol=1e-13)


def test_constrained_zero_tuple_shapes():
    vctx = build_variety(CTX2, commutator_ideal())
    X = zero_tuple(2, 1)
    th = constrained_characteristic_function(vctx, X)
    assert th.constrained
    Nd = vctx.N_frame.dim
    assert th.theta.shape == (Nd, 2 * Nd)


def test_constrained_requires_vanishing():
    from fockmodel.variety import ConstraintViolated
    vctx = build_variety(CTX2, commutator_ideal())
    X = random_nilpotent(2, 4, 3)   # generic pair does not commute
    assert commutativity_defect(X) > 1e-3
    with pytest.raises(ConstraintViolated):
        constrained_characteristic_function(vctx, X)


# ---------------------------------------------------------------------------
# fundamental identity I - Theta Theta^H = K K^H
# ---------------------------------------------------------------------------

def test_fundamental_identity_zero_tuple_exact():
    X = zero_tuple(2, 1)
    K = poisson_kernel(CTX2, X)
    th = characteristic_function(CTX2, X)
    rep = fundamental_identity_check(K, th)
    assert rep.residual_full <= 1e-12
    assert rep.passed and not rep.degenerate


def test_fundamental_identity_random_nilpotent():
    for seed in (5, 11):
        X = random_nilpotent(2, 4, seed)
        K = poisson_kernel(CTX_SH, X)
        th = characteristic_function(CTX_SH, X)
        rep = fundamental_identity_check(K, th)
        assert rep.residual_interior <= 1e-8
        assert rep.passed


def test_fundamental_identity_single_variable_jordan():
    K = poisson_kernel(CTX1, JORDAN2)
    th = characteristic_function(CTX1, JORDAN2)
    rep = fundamental_identity_check(K, th)
    assert rep.residual_interior <= 1e-8


def test_fundamental_identity_constrained():
    vctx = build_variety(CTX2, commutator_ideal())
    rng = np.random.default_rng(8)
    J = np.diag(np.ones(3), 1).astype(complex)
    mats = [sum(c * np.linalg.matrix_power(J, k + 1)
                for k, c in enumerate(rng.standard_normal(3)))
            for _ in range(2)]
    s = 0.5 / spectral_norm(np.hstack(mats))
    X = OperatorTuple(tuple(s * A for A in mats))
    K = poisson_kernel(CTX2, X, variety=vctx)
    th = constrained_characteristic_function(vctx, X)
    rep = fundamental_identity_check(K, th)
    assert rep.residual_interior <= 1e-8


# ---------------------------------------------------------------------------
# isometry <-> purity
# ---------------------------------------------------------------------------

def test_isometry_iff_pure_zero_tuple():
    X = zero_tuple(2, 1)
    rep = isometry_iff_pure_check(characteristic_function(CTX2, X),
                                  pure_check(CTX2, X))
    assert rep.consistent and rep.pure and rep.defect <= 1e-12


def test_isometry_iff_pure_random_nilpotent():
    X = random_nilpotent(2, 3, 21)
    rep = isometry_iff_pure_check(characteristic_function(CTX_SH, X),
                                  pure_check(CTX_SH, X))
    assert rep.consistent and rep.pure
    assert rep.defect <= 1e-10


def test_isometry_scalar_one_degenerate():
    X = OperatorTuple((np.eye(1, dtype=complex),))
    rep = isometry_iff_pure_check(characteristic_function(CTX1, X),
                                  pure_check(CTX1, X))
    assert rep.degenerate
    assert rep.consistent            # vacuously: both defects vanish


# ---------------------------------------------------------------------------
# coincidence
# ---------------------------------------------------------------------------

def test_coincide_with_itself():
    X = random_nilpotent(2, 3, 33)
    th = characteristic_function(CTX_SH, X)
    rep = coincide(th, th, tau=np.eye(th.defect_dim),
                   tau_star=np.eye(th.dstar_dim))
    assert rep.coincide and rep.residual <= 1e-13 and rep.mode == "witness"


def test_coincide_under_unitary_conjugation():
    rng = np.random.default_rng(41)
    X = random_nilpotent(2, 3, 13)
    W = np.linalg.qr(rng.standard_normal((3, 3))
                     + 1j * rng.standard_normal((3, 3)))[0]
    Y = OperatorTuple(tuple(W @ A @ dagger(W) for A in X.T))
    D1 = defects(CTX_SH, X)
    D2 = defects(CTX_SH, Y)
    t1 = characteristic_function(CTX_SH, X, D=D1)
    t2 = characteristic_function(CTX_SH, Y, D=D2)
    tau, tau_star = witnesses_from_unitary(D1, D2, W)
    rep = coincide(t1, t2, tau=tau, tau_star=tau_star)
    assert rep.coincide and rep.residual <= 1e-10
    # the constructed-witness path finds the same relation
    rep2 = coincide(t1, t2, known_unitary=W)
    assert rep2.coincide and rep2.mode == "constructed"


def test_coincide_rank_obstruction():
    t_zero = characteristic_function(CTX1, zero_tuple(1, 2))
    t_j2 = characteristic_function(CTX1, JORDAN2)
    rep = coincide(t_zero, t_j2)
    assert not rep.coincide
    assert rep.mode == "rank"


def test_coincidence_is_an_equivalence_on_witnessed_pairs():
    rng = np.random.default_rng(55)
    X = random_nilpotent(2, 3, 77)
    W1 = np.linalg.qr(rng.standard_normal((3, 3))
                      + 1j * rng.standard_normal((3, 3)))[0]
    W2 = np.linalg.qr(rng.standard_normal((3, 3))
                      + 1j * rng.standard_normal((3, 3)))[0]
    Y = OperatorTuple(tuple(W1 @ A @ dagger(W1) for A in X.T))
    Z = OperatorTuple(tuple(W2 @ A @ dagger(W2) for A in Y.T))
    tx = characteristic_function(CTX_SH, X)
    ty = characteristic_function(CTX_SH, Y)
    tz = characteristic_function(CTX_SH, Z)
    # reflexive / symmetric / transitive through the witness construction
    assert coincide(tx, tx, known_unitary=np.eye(3)).coincide
    assert coincide(tx, ty, known_unitary=W1).coincide
    assert coincide(ty, tx, known_unitary=dagger(W1)).coincide
    assert coincide(tx, tz, known_unitary=W2 @ W1).coincide


# ---------------------------------------------------------------------------
# purely contractive symbols
# ---------------------------------------------------------------------------

def test_purely_contractive_zero_tuple():
    th = characteristic_function(CTX2, zero_tuple(2, 1))
    rep = purely_contractive_check(th)
    assert rep.purely_contractive
    assert rep.sigma_max <= 1e-12     # vacuum block of a vanishing symbol


def test_purely_contractive_jordan_cell():
    rep = purely_contractive_check(characteristic_function(CTX1, JORDAN2))
    assert rep.purely_contractive and rep.sigma_max <= 1e-12
    assert rep.range_condition


def test_vacuum_block_of_scalar_point_is_the_point():
    # T = [1/2]: Theta(0) = -f(T) has singular value 1/2, still < 1
    X = OperatorTuple((0.5 * np.eye(1, dtype=complex),))
    rep = purely_contractive_check(characteristic_function(CTX1, X))
    assert rep.sigma_max == pytest.approx(0.5, abs=1e-10)
    assert rep.purely_contractive


# ---------------------------------------------------------------------------
# multi-analyticity
# ---------------------------------------------------------------------------

def test_multi_analyticity_on_reference_tuples():
    for ctx, X in ((CTX2, zero_tuple(2, 1)),
                   (CTX_SH, random_nilpotent(2, 3, 91)),
                   (CTX1, JORDAN2)):
        th = characteristic_function(ctx, X)
        assert max(multi_analyticity_check(th)) <= 1e-8


# ---------------------------------------------------------------------------
# commutative point evaluation
# ---------------------------------------------------------------------------

def test_point_value_single_variable_identity():
    X = zero_tuple(1, 1)
    D = defects(CTX1, X)
    for z in (0.0, 0.3, -0.2 + 0.4j):
        val = commutative_char_at_point(CTX1, X, D, [z])
        npt.assert_allclose(val, [[z]], atol=1e-13)


def test_point_value_jordan_cell_is_blaschke_square():
    D = defects(CTX1, JORDAN2)
    rng = np.random.default_rng(17)
    for _ in range(20):
        z = 0.8 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)) / np.sqrt(2)
        val = commutative_char_at_point(CTX1, JORDAN2, D, [z])
        assert val.shape == (1, 1)
        assert abs(val[0, 0] - z * z) <= 1e-9


def test_point_value_zero_point_is_minus_f():
    X = OperatorTuple((np.diag([0.2, -0.1]).astype(complex),))
    D = defects(CTX1, X)
    val = commutative_char_at_point(CTX1, X, D, [0.0])
    oracle = -dagger(D.frame_D.frame) @ X[0] @ D.frame_Dstar.frame
    npt.assert_allclose(val, oracle, atol=1e-12)


def test_point_value_matches_classical_resolvent_formula():
    # n = 1, f = z: compare against the sampled classical formula
    rng = np.random.default_rng(29)
    T = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    T = 0.6 * T / spectral_norm(T)
    X = OperatorTuple((T,))
    D = defects(CTX1, X)
    dT = D.delta
    dTs = D.delta_star
    for z in (0.1, -0.3 + 0.2j, 0.5j):
        val = commutative_char_at_point(CTX1, X, D, [z])
        classical = -T + dT @ np.linalg.solve(
            np.eye(3) - z * dagger(T), z * np.eye(3)) @ dTs
        oracle = dagger(D.frame_D.frame) @ classical @ D.frame_Dstar.frame
        npt.assert_allclose(val, oracle, atol=1e-10)


def test_point_value_rejects_noncommuting_and_outside():
    X = random_nilpotent(2, 3, 7)
    D = defects(CTX_SH, X)
    with pytest.raises(NonCommutingTuple):
        commutative_char_at_point(CTX_SH, X, D, [0.1, 0.1])
    Y = zero_tuple(1, 1)
    DY = defects(CTX1, Y)
    with pytest.raises(PointOutsideDomain):
        commutative_char_at_point(CTX1, Y, DY, [1.2])
