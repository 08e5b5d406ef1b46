"""Dense complex linear algebra backbone.

Everything downstream works with square/rectangular complex matrices
(``numpy.ndarray``, dtype complex128): Hermitian square roots for defect
operators, orthonormal range frames for subspaces, spectral norms for
contractivity checks, and minimal-norm least squares for realizing maps on
computed range frames.  The tolerance policy lives here and is threaded
through every module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotHermitian(ValueError):
    """Input required to be Hermitian is not, beyond the working tolerance."""


class NegativeEigenvalue(ValueError):
    """A nominally PSD matrix has an eigenvalue below -check_abs."""


class InconsistentSystem(ValueError):
    """A least-squares system demanded exact had a large residual."""


@dataclass(frozen=True)
class Tolerances:
    """Global numeric policy.

    rank_rel  -- relative singular-value cutoff for numerical rank
    check_abs -- absolute bound for identity-type residual checks
    opt_tol   -- stopping bound for the norm-completion optimizer
    """

    rank_rel: float = 1e-9
    check_abs: float = 1e-8
    opt_tol: float = 1e-6

    def __post_init__(self):
        if not (self.rank_rel > 0 and self.check_abs > 0 and self.opt_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if not self.rank_rel < 1:
            raise ValueError("rank_rel must be < 1")


DEFAULT_TOL = Tolerances()


def ascomplex(A) -> np.ndarray:
    """Coerce to a 2-d complex matrix and reject non-finite entries."""
    M = np.atleast_2d(np.asarray(A, dtype=complex))
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def dagger(A) -> np.ndarray:
    return np.conjugate(np.transpose(A))


def spectral_norm(A) -> float:
    """Largest singular value; 0 for an empty matrix."""
    M = ascomplex(A)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def unitary_check(U, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff U^H U and U U^H are both the identity within check_abs."""
    M = ascomplex(U)
    if M.shape[0] != M.shape[1]:
        return False
    eye = np.eye(M.shape[0])
    return (
        spectral_norm(dagger(M) @ M - eye) <= tol.check_abs
        and spectral_norm(M @ dagger(M) - eye) <= tol.check_abs
    )


def hermitian_psd_sqrt(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Hermitian PSD square root B of a Hermitian PSD matrix, B @ B = A.

    The input is symmetrized before factoring; eigenvalues in
    [-check_abs, 0) are clamped to 0 (roundoff from an argument that is PSD
    in exact arithmetic), anything below -check_abs raises
    NegativeEigenvalue -- for defect arguments that signals an operator
    tuple outside the unit domain.
    """
    M = ascomplex(A)
    if M.shape[0] != M.shape[1]:
        raise ValueError("square matrix required")
    if M.size == 0:
        return M.copy()
    if spectral_norm(M - dagger(M)) > tol.check_abs:
        raise NotHermitian(f"asymmetry {spectral_norm(M - dagger(M)):.3e}")
    H = (M + dagger(M)) / 2.0
    w, V = np.linalg.eigh(H)
    if w[0] < -tol.check_abs:
        raise NegativeEigenvalue(f"min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    B = (V * np.sqrt(w)) @ dagger(V)
    return (B + dagger(B)) / 2.0


@dataclass(frozen=True)
class Subspace:
    """A subspace of C^ambient_dim given by a frame with orthonormal columns."""

    ambient_dim: int
    frame: np.ndarray  # shape (ambient_dim, dim)

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return self.frame @ dagger(self.frame)

    def coords(self, X) -> np.ndarray:
        """Coefficients of columns of X in the frame (orthogonal projection)."""
        return dagger(self.frame) @ ascomplex(X)

    def complement(self) -> "Subspace":
        """Orthogonal complement inside the ambient space."""
        Q = np.eye(self.ambient_dim) - self.projector()
        # Q is a projector up to roundoff, so its singular values sit near
        # {0, 1}: cut at 1/2.  A relative cut would promote roundoff
        # directions to full rank when the complement is actually zero.
        U, s, _ = np.linalg.svd(Q)
        r = int(np.sum(s > 0.5))
        return Subspace(self.ambient_dim, U[:, :r].copy())

    def compress(self, A) -> np.ndarray:
        """Compression F^H A F of an ambient operator to this subspace."""
        return dagger(self.frame) @ ascomplex(A) @ self.frame


def full_space(dim: int) -> Subspace:
    return Subspace(dim, np.eye(dim, dtype=complex))


def orth_range(A, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Orthonormal frame for the column space of A.

    Numerical rank counts singular values above rank_rel * sigma_max; the
    zero matrix yields a rank-0 frame.
    """
    M = ascomplex(A)
    if M.size == 0:
        return Subspace(M.shape[0], np.zeros((M.shape[0], 0), dtype=complex))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return Subspace(M.shape[0], np.zeros((M.shape[0], 0), dtype=complex))
    rank = int(np.sum(s > tol.rank_rel * s[0]))
    return Subspace(M.shape[0], U[:, :rank].copy())


def span_union(mats, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Orthonormal frame for the joint column span of several matrices."""
    mats = [ascomplex(M) for M in mats if np.size(M)]
    if not mats:
        raise ValueError("need at least one nonempty matrix")
    return orth_range(np.hstack(mats), tol)


def least_squares_on_range(A, B, tol: Tolerances = DEFAULT_TOL,
                           require_exact: bool = False):
    """Minimal-norm X with A @ X ~= B; returns (X, residual).

    With require_exact the residual must stay within check_abs, else
    InconsistentSystem -- used when a map is known to exist on a computed
    range and the solve is only a change of coordinates.
    """
    MA, MB = ascomplex(A), ascomplex(B)
    if MA.shape[0] != MB.shape[0]:
        raise ValueError("row counts differ")
    X, _, _, _ = np.linalg.lstsq(MA, MB, rcond=tol.rank_rel)
    residual = spectral_norm(MA @ X - MB)
    if require_exact and residual > tol.check_abs:
        raise InconsistentSystem(f"residual {residual:.3e}")
    return X, residual
