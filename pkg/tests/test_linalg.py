import numpy as np
import numpy.testing as npt
import pytest

from fockmodel.linalg import (
    DEFAULT_TOL, InconsistentSystem, NegativeEigenvalue, NotHermitian,
    Tolerances, dagger, full_space, hermitian_psd_sqrt,
    least_squares_on_range, orth_range, span_union, spectral_norm,
    unitary_check,
)


def _power_iteration_norm(A, iters=2000):
    # independent check: largest singular value via power iteration on A^H A
    M = np.asarray(A, dtype=complex)
    H = dagger(M) @ M
    v = np.ones(H.shape[0], dtype=complex) / np.sqrt(H.shape[0])
    for _ in range(iters):
        w = H @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.sqrt(np.real(np.vdot(v, H @ v))))


# ---------------------------------------------------------------------------
# hermitian_psd_sqrt
# ---------------------------------------------------------------------------

def test_sqrt_identity():
    npt.assert_allclose(hermitian_psd_sqrt(np.eye(3)), np.eye(3), atol=1e-14)


def test_sqrt_diagonal():
    A = np.diag([4.0, 0.0])
    npt.assert_allclose(hermitian_psd_sqrt(A), np.diag([2.0, 0.0]), atol=1e-14)


def test_sqrt_random_psd_matches_eig_factorization():
    rng = np.random.default_rng(11)
    M = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    A = M @ dagger(M)
    B = hermitian_psd_sqrt(A)
    # oracle: V sqrt(D) V^H from an independent eigendecomposition
    w, V = np.linalg.eigh((A + dagger(A)) / 2)
    oracle = (V * np.sqrt(np.clip(w, 0, None))) @ dagger(V)
    assert spectral_norm(B - oracle) <= 1e-8
    assert spectral_norm(B @ B - A) <= 1e-10
    assert spectral_norm(B - dagger(B)) <= 1e-12


def test_sqrt_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_psd_sqrt(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_sqrt_rejects_negative_eigenvalue():
    with pytest.raises(NegativeEigenvalue):
        hermitian_psd_sqrt(np.diag([1.0, -0.5]))


def test_sqrt_clamps_roundoff_negatives():
    # eigenvalue at -1e-12 is inside the clamp band, not an error
    B = hermitian_psd_sqrt(np.diag([1.0, -1e-12]))
    npt.assert_allclose(B, np.diag([1.0, 0.0]), atol=1e-6)


def test_sqrt_property_random_sweep():
    rng = np.random.default_rng(202)
    for k in range(8):
        d = int(rng.integers(1, 7))
        M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        A = M @ dagger(M)
        B = hermitian_psd_sqrt(A)
        assert spectral_norm(B @ B - A) <= 1e-9 * max(1.0, spectral_norm(A))
        assert np.linalg.eigvalsh(B).min() >= -1e-12


# ---------------------------------------------------------------------------
# orth_range / Subspace
# ---------------------------------------------------------------------------

def test_orth_range_zero_matrix():
    sub = orth_range(np.zeros((3, 3)))
    assert sub.dim == 0
    assert sub.frame.shape == (3, 0)


def test_orth_range_rank_one_diagonal():
    sub = orth_range(np.diag([1.0, 0.0, 0.0]))
    assert sub.dim == 1
    npt.assert_allclose(np.abs(sub.frame[:, 0]), [1.0, 0.0, 0.0], atol=1e-14)


def test_orth_range_tall_rank_two():
    rng = np.random.default_rng(5)
    u = rng.standard_normal((6, 1)) + 1j * rng.standard_normal((6, 1))
    v = rng.standard_normal((6, 1)) + 1j * rng.standard_normal((6, 1))
    A = np.hstack([u, v, u + v])  # third column dependent
    sub = orth_range(A)
    assert sub.dim == 2
    F = sub.frame
    npt.assert_allclose(dagger(F) @ F, np.eye(2), atol=1e-12)
    # columns of A reproduce from the frame
    assert spectral_norm(F @ (dagger(F) @ A) - A) <= 1e-10


def test_projector_idempotent_and_hermitian():
    rng = np.random.default_rng(17)
    for _ in range(6):
        A = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        P = orth_range(A).projector()
        assert spectral_norm(P @ P - P) <= 1e-12
        assert spectral_norm(P - dagger(P)) <= 1e-12


def test_subspace_complement_and_compress():
    sub = orth_range(np.diag([1.0, 1.0, 0.0]))
    comp = sub.complement()
    assert comp.dim == 1
    assert spectral_norm(sub.projector() + comp.projector() - np.eye(3)) <= 1e-12
    A = np.arange(9.0).reshape(3, 3)
    C = sub.compress(A)
    assert C.shape == (2, 2)


def test_full_space():
    assert full_space(4).dim == 4
    npt.assert_allclose(full_space(4).projector(), np.eye(4))


def test_span_union():
    e = np.eye(4)
    sub = span_union([e[:, :1], e[:, 1:2], e[:, :2]])
    assert sub.dim == 2


def test_rank_is_unitary_invariant():
    rng = np.random.default_rng(23)
    A = rng.standard_normal((5, 5)) @ np.diag([1, 1, 1, 0, 0]) \
        @ rng.standard_normal((5, 5))
    Q = np.linalg.qr(rng.standard_normal((5, 5))
                     + 1j * rng.standard_normal((5, 5)))[0]
    assert orth_range(A).dim == orth_range(Q @ A).dim == 3


# ---------------------------------------------------------------------------
# spectral_norm
# ---------------------------------------------------------------------------

def test_norm_identity():
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-14)


def test_norm_unit_row():
    A = np.array([[1.0, 1.0]]) / np.sqrt(2)
    assert spectral_norm(A) == pytest.approx(1.0, abs=1e-14)


def test_norm_matches_power_iteration():
    rng = np.random.default_rng(31)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert abs(spectral_norm(A) - _power_iteration_norm(A)) <= 1e-10


def test_norm_submultiplicative():
    rng = np.random.default_rng(37)
    for _ in range(6):
        A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert spectral_norm(A @ B) <= spectral_norm(A) * spectral_norm(B) \
            + 1e-12


# ---------------------------------------------------------------------------
# least_squares_on_range
# ---------------------------------------------------------------------------

def test_lstsq_identity_system():
    B = np.arange(6.0).reshape(3, 2)
    X, res = least_squares_on_range(np.eye(3), B)
    npt.assert_allclose(X, B, atol=1e-12)
    assert res <= 1e-12


def test_lstsq_consistent_random_system():
    rng = np.random.default_rng(41)
    A = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    X0 = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    X, res = least_squares_on_range(A, A @ X0, require_exact=True)
    assert res <= 1e-10
    npt.assert_allclose(X, X0, atol=1e-8)


def test_lstsq_minimal_norm_solution():
    # rank-deficient A: solver must pick the least-norm representative
    A = np.diag([1.0, 0.0])
    X, res = least_squares_on_range(A, np.array([[2.0], [0.0]]))
    npt.assert_allclose(X, [[2.0], [0.0]], atol=1e-12)
    assert res <= 1e-12


def test_lstsq_inconsistent_raises_when_exact_required():
    A = np.zeros((2, 2))
    with pytest.raises(InconsistentSystem):
        least_squares_on_range(A, np.eye(2), require_exact=True)


# ---------------------------------------------------------------------------
# unitary_check
# ---------------------------------------------------------------------------

def test_unitary_identity():
    assert unitary_check(np.eye(5))


def test_unitary_rejects_diagonal_stretch():
    assert not unitary_check(np.diag([1.0, 2.0]))


def test_unitary_householder_product():
    rng = np.random.default_rng(43)
    U = np.eye(4, dtype=complex)
    for _ in range(3):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v = v / np.linalg.norm(v)
        U = U @ (np.eye(4) - 2.0 * np.outer(v, np.conj(v)))
    assert unitary_check(U)


def test_tolerances_carrier():
    t = Tolerances(1e-9, 1e-8, 1e-6)
    assert t.rank_rel == 1e-9 and t.check_abs == 1e-8 and t.opt_tol == 1e-6
    assert DEFAULT_TOL.check_abs == 1e-8
