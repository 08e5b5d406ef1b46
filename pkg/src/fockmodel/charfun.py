"""Characteristic functions of tuples in the unit domain of f.

The free characteristic function of X is a contractive multi-analytic
operator from Fock (x) D_* to Fock (x) D assembled verbatim from the
right multiplications Lambda_i, the resolvent (I - sum Lambda_i (x)
f_i(X)^H)^{-1} (a finite Neumann sum, since Lambda_i is nilpotent at
truncation), and the two defect operators.  The constrained variant
replaces Lambda_i by its compression W_i to the co-invariant subspace N
of a variety context.

All tensor indices are ordered (word, defect column): the ambient basis
of Fock (x) D is e_alpha (x) d_j with flat index  word_index * dim(D) + j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock as fk
from .domain import (DefectData, ModelContext, OperatorTuple, cp_map,
                     defects, evaluate_series, membership_check)
from .linalg import (DEFAULT_TOL, Subspace, Tolerances, ascomplex, dagger,
                     hermitian_psd_sqrt, orth_range, spectral_norm,
                     unitary_check)


class ContextMismatch(ValueError):
    """Kernel and characteristic function built from different data."""


class ShapeMismatch(ValueError):
    """Coincidence test between operators on different model spaces."""


class PointOutsideDomain(ValueError):
    """Scalar point fails the domain certificates."""


class NonCommutingTuple(ValueError):
    """Commutative-case operation fed a non-commuting tuple."""


# ---------------------------------------------------------------------------
# data carrier
# ---------------------------------------------------------------------------

@dataclass
class CharFunData:
    theta: np.ndarray        # (basis_dim * dD) x (basis_dim * dDstar)
    delta_theta: np.ndarray  # (I - theta^H theta)^(1/2)
    ctx: ModelContext
    X: OperatorTuple
    D: DefectData
    constrained: bool
    variety: object          # VarietyContext when constrained, else None
    basis_dim: int           # Fock dim (free) or dim N (constrained)
    margin: int              # interior margin for the exactness claims

    @property
    def defect_dim(self) -> int:
        return self.D.frame_D.dim

    @property
    def dstar_dim(self) -> int:
        return self.D.frame_Dstar.dim

    @property
    def degenerate(self) -> bool:
        return self.D.degenerate

    def interior_weight(self, margin: int = None) -> np.ndarray:
        """Basis-side interior compression: a 0/1 projector on the free
        Fock basis, the (contractive) two-sided compression frame^H P frame
        on a variety basis.  Exact projector whenever the basis is graded."""
        P = self.ctx.interior(self.margin if margin is None else margin).matrix()
        if not self.constrained:
            return P
        F = self.variety.N_frame.frame
        return dagger(F) @ P @ F

    def basis_degrees(self) -> np.ndarray:
        """Word length per basis slot (dominant word length per frame
        column on a variety basis)."""
        lengths = self.ctx.fock.word_lengths()
        if not self.constrained:
            return np.asarray(lengths)
        F = self.variety.N_frame.frame
        return np.array([int(lengths[np.abs(F[:, j]) > 1e-10].max())
                         for j in range(F.shape[1])])

    def symbol_spread(self) -> int:
        """Largest output-degree minus input-degree over the matrix entries:
        the degree of the underlying symbol.  Columns within this many
        degrees of the truncation edge have cut tails, so exactness claims
        about Theta^H Theta hold on the interior with this margin."""
        if self.degenerate or not self.theta.size:
            return 0
        degs = self.basis_degrees()
        dD, dDs = self.defect_dim, self.dstar_dim
        rowdeg = np.repeat(degs, dD)
        coldeg = np.repeat(degs, dDs)
        mask = np.abs(self.theta) > 1e-10
        spread = 0
        for c in range(self.theta.shape[1]):
            rows = mask[:, c]
            if rows.any():
                spread = max(spread, int(rowdeg[rows].max()) - int(coldeg[c]))
        return spread

    def model_ops(self) -> tuple:
        return tuple(self.variety.B) if self.constrained else self.ctx.MZ

    def fmult_ops(self) -> tuple:
        """Multiplication by f_i on the basis space (S_i, or its compression)."""
        if not self.constrained:
            return self.ctx.MF
        F = self.variety.N_frame.frame
        return tuple(dagger(F) @ S @ F for S in self.ctx.MF)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _char_matrix(degree: int, FX, delta, delta_star, right_ops) -> np.ndarray:
    """-I (x) f(X)row + (I (x) Delta) resolvent [L_1 (x) I, ...] (I (x) Delta*).

    right_ops act on the basis space (dimension B); FX are the f_i(X) on
    C^m.  Returns the uncompressed matrix (B*m) x (B*n*m).
    """
    n = len(FX)
    m = FX[0].shape[0]
    B = right_ops[0].shape[0]
    rowFX = np.hstack(FX)                               # m x nm
    theta = -np.kron(np.eye(B), rowFX)                  # (B m) x (B n m)

    L = sum(np.kron(right_ops[i], dagger(FX[i])) for i in range(n))
    res = np.eye(B * m, dtype=complex)
    term = np.eye(B * m, dtype=complex)
    for _ in range(degree):                             # Neumann sum, d+1 terms
        term = term @ L
        res = res + term

    # the row [L_1 (x) I, ..., L_n (x) I] with the (word, slot, vector)
    # index shuffle folded in: block (i) picks the i-th C^m slot
    row = np.zeros((B * m, B * n * m), dtype=complex)
    Im = np.eye(m)
    for i in range(n):
        slot = np.zeros((1, n))
        slot[0, i] = 1.0
        row += np.kron(right_ops[i], np.kron(slot, Im))

    theta += np.kron(np.eye(B), delta) @ res @ row @ np.kron(np.eye(B), delta_star)
    return theta


def _compress(theta_full, B, frame_D, frame_Dstar) -> np.ndarray:
    left = np.kron(np.eye(B), dagger(frame_D.frame))
    right = np.kron(np.eye(B), frame_Dstar.frame)
    return left @ theta_full @ right


def characteristic_function(ctx: ModelContext, X: OperatorTuple,
                            D: DefectData = None,
                            tol: Tolerances = DEFAULT_TOL) -> CharFunData:
    """Free characteristic function of X, compressed to the defect frames."""
    if D is None:
        D = defects(ctx, X, tol)
    F = ctx.dim
    full = _char_matrix(ctx.degree, list(D.fX), D.delta, D.delta_star, ctx.LAM)
    theta = _compress(full, F, D.frame_D, D.frame_Dstar)
    dth = hermitian_psd_sqrt(
        np.eye(theta.shape[1]) - dagger(theta) @ theta, tol) \
        if theta.size else np.zeros((theta.shape[1], theta.shape[1]))
    return CharFunData(theta, dth, ctx, X, D, False, None, F,
                       ctx.model_margin() + 1)


def constrained_characteristic_function(vctx, X: OperatorTuple,
                                        D: DefectData = None,
                                        tol: Tolerances = DEFAULT_TOL) -> CharFunData:
    """Constrained characteristic function: W_i in place of Lambda_i,
    acting between N (x) D_* and N (x) D."""
    from .variety import ConstraintViolated, vanishing_check
    ctx = vctx.model
    if D is None:
        D = defects(ctx, X, tol)
    van = vanishing_check(vctx, X, tol)
    if not van.passed:
        raise ConstraintViolated(
            f"tuple does not annihilate the ideal (max residual {van.max_residual:.3e})")
    Nd = vctx.N_frame.dim
    full = _char_matrix(ctx.degree, list(D.fX), D.delta, D.delta_star, vctx.W)
    theta = _compress(full, Nd, D.frame_D, D.frame_Dstar)
    dth = hermitian_psd_sqrt(
        np.eye(theta.shape[1]) - dagger(theta) @ theta, tol) \
        if theta.size else np.zeros((theta.shape[1], theta.shape[1]))
    return CharFunData(theta, dth, ctx, X, D, True, vctx, Nd,
                       ctx.model_margin() + 1)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    residual_full: float
    residual_interior: float
    margin: int
    pure_tail: float
    degenerate: bool
    passed: bool


def fundamental_identity_check(K, theta: CharFunData,
                               tol: Tolerances = DEFAULT_TOL) -> IdentityReport:
    """|| I - Theta Theta^H - K K^H || on basis (x) D, interior-compressed.

    K is the Poisson kernel data of the same tuple (and the same variety,
    when constrained)."""
    if K.basis_dim != theta.basis_dim or K.defect_dim != theta.defect_dim:
        raise ContextMismatch("kernel and characteristic function disagree "
                              f"on basis/defect dims ({K.basis_dim},{K.defect_dim}) "
                              f"vs ({theta.basis_dim},{theta.defect_dim})")
    dD = theta.defect_dim
    if theta.degenerate:
        return IdentityReport(0.0, 0.0, theta.margin, K.pure_tail, True, True)
    dim = theta.basis_dim * dD
    E = np.eye(dim) - theta.theta @ dagger(theta.theta) - K.K @ dagger(K.K)
    Q = np.kron(theta.interior_weight(), np.eye(dD))
    res_int = spectral_norm(Q @ E @ Q)
    passed = res_int <= tol.check_abs + K.pure_tail
    return IdentityReport(spectral_norm(E), res_int, theta.margin,
                          K.pure_tail, False, passed)


@dataclass(frozen=True)
class IsometryReport:
    defect: float            # isometry (free) / partial-isometry (constrained)
    kind: str
    pure: bool
    consistent: bool
    degenerate: bool


def isometry_iff_pure_check(theta: CharFunData, pure_report,
                            tol: Tolerances = DEFAULT_TOL,
                            tail: float = 0.0) -> IsometryReport:
    """Pure tuples have isometric free characteristic functions (partial
    isometries in the constrained case); measured on the interior, with
    the margin widened to the symbol spread so that only uncut columns
    are compared.  `tail` loosens the isometry threshold for tuples that
    are pure but whose power decay has not flattened out by the working
    degree (the defect is honestly of tail size for those)."""
    if theta.degenerate:
        return IsometryReport(0.0, "degenerate", pure_report.pure,
                              True, True)
    margin = max(theta.margin, theta.symbol_spread())
    P = dagger(theta.theta) @ theta.theta
    Q = np.kron(theta.interior_weight(margin), np.eye(theta.dstar_dim))
    if theta.constrained:
        defect = spectral_norm(Q @ (P @ P - P) @ Q)
        kind = "partial_isometry"
    else:
        defect = spectral_norm(Q @ (P - np.eye(P.shape[0])) @ Q)
        kind = "isometry"
    ok = defect <= tol.check_abs + tail
    return IsometryReport(defect, kind, pure_report.pure,
                          ok == pure_report.pure, False)


@dataclass(frozen=True)
class CoincidenceReport:
    coincide: bool
    residual: float
    mode: str                # "witness" / "constructed" / "heuristic" / "rank"
    tau: np.ndarray
    tau_star: np.ndarray


def witnesses_from_unitary(D1: DefectData, D2: DefectData, W) -> tuple:
    """The defect-frame unitaries induced by X' = W X W^H: tau = W|_D,
    tau_* = (directsum^n W)|_{D_*}, both in frame coordinates."""
    W = ascomplex(W)
    n = D1.delta_star.shape[0] // D1.delta.shape[0]
    tau = dagger(D2.frame_D.frame) @ W @ D1.frame_D.frame
    Wn = np.kron(np.eye(n), W)
    tau_star = dagger(D2.frame_Dstar.frame) @ Wn @ D1.frame_Dstar.frame
    return tau, tau_star


def coincide(t1: CharFunData, t2: CharFunData, tau=None, tau_star=None,
             known_unitary=None, tol: Tolerances = DEFAULT_TOL,
             sweeps: int = 500) -> CoincidenceReport:
    """Do Theta and Theta' coincide: (I (x) tau) Theta = Theta' (I (x) tau_*)
    for unitary tau, tau_*?

    With a witness pair the relation is verified directly.  With a known
    base-space unitary the witnesses are constructed from it.  Otherwise a
    least-squares unitary fit is attempted (heuristic: a large residual is
    not a proof of non-coincidence).
    """
    if t1.basis_dim != t2.basis_dim:
        raise ShapeMismatch("characteristic functions live on different "
                            f"basis spaces ({t1.basis_dim} vs {t2.basis_dim})")
    d1, d1s = t1.defect_dim, t1.dstar_dim
    d2, d2s = t2.defect_dim, t2.dstar_dim
    if (d1, d1s) != (d2, d2s):
        return CoincidenceReport(False, float("inf"), "rank",
                                 np.zeros((d2, d1)), np.zeros((d2s, d1s)))
    B = t1.basis_dim
    scale = max(1.0, spectral_norm(t1.theta), spectral_norm(t2.theta))

    def residual(tau, tau_star):
        lhs = np.kron(np.eye(B), tau) @ t1.theta
        rhs = t2.theta @ np.kron(np.eye(B), tau_star)
        return spectral_norm(lhs - rhs)

    if tau is not None:
        mode = "witness"
    elif known_unitary is not None:
        tau, tau_star = witnesses_from_unitary(t1.D, t2.D, known_unitary)
        mode = "constructed"
    else:
        tau, tau_star = _fit_witnesses(t1.theta, t2.theta, B, d1, d1s, sweeps)
        mode = "heuristic"
    for U in (tau, tau_star):
        if U.size and not unitary_check(U, tol):
            return CoincidenceReport(False, residual(tau, tau_star), mode,
                                     tau, tau_star)
    r = residual(tau, tau_star)
    return CoincidenceReport(r <= tol.check_abs * scale * 10, r, mode,
                             tau, tau_star)


def _fit_witnesses(T1, T2, B, dD, dDs, sweeps):
    """Alternating Procrustes fit of (tau, tau_star), best of a few
    deterministic restarts (the joint problem is non-convex)."""
    if dD == 0 or dDs == 0:
        return np.eye(dD), np.eye(dDs)
    A1 = T1.reshape(B, dD, B, dDs)
    A2 = T2.reshape(B, dD, B, dDs)

    def procrustes(M):
        u, _, vh = np.linalg.svd(M)
        return u @ vh

    def run(tau_star):
        tau = np.eye(dD, dtype=complex)
        err = np.inf
        for _ in range(sweeps):
            # tau step: min || tau . A1 - A2 . tau_star ||_F over unitary tau
            C = np.einsum("aibl,lj->aibj", A2, tau_star)
            M = np.einsum("aibj,akbj->ik", C, np.conj(A1))
            tau = procrustes(M)
            # tau_star step: min || (I x tau) T1 - A2 . tau_star ||_F
            L = np.einsum("ik,akbj->aibj", tau, A1)
            Ms = np.einsum("aibl,aibj->lj", np.conj(A2), L)
            tau_star = procrustes(Ms)
            err = np.linalg.norm(L - np.einsum("aibl,lj->aibj", A2, tau_star))
            if err <= 1e-13:
                break
        return err, tau, tau_star

    rng = np.random.default_rng(0)
    starts = [np.eye(dDs, dtype=complex)]
    for _ in range(3):
        G = rng.standard_normal((dDs, dDs)) + 1j * rng.standard_normal((dDs, dDs))
        starts.append(np.linalg.qr(G)[0])
    best = min((run(s) for s in starts), key=lambda t: t[0])
    return best[1], best[2]


@dataclass(frozen=True)
class PureContractiveReport:
    sigma_max: float
    purely_contractive: bool
    range_rank_full: int
    range_rank_shifted: int
    range_condition: bool
    degenerate: bool


def purely_contractive_check(theta: CharFunData,
                             tol: Tolerances = DEFAULT_TOL) -> PureContractiveReport:
    """Vacuum block strictly contractive, plus the defect range condition
    Delta_Theta(all) = Delta_Theta(span of the f_i-shifted copies)."""
    dD, dDs = theta.defect_dim, theta.dstar_dim
    if theta.degenerate:
        return PureContractiveReport(0.0, True, 0, 0, True, True)
    B = theta.basis_dim
    if theta.constrained:
        v = dagger(theta.variety.N_frame.frame) @ theta.ctx.fock.basis_vector(())
        nv = np.linalg.norm(v)
        if nv <= tol.check_abs:       # vacuum not in N: no meaningful block
            v = None
        else:
            v = v / nv
    else:
        v = np.zeros(B, dtype=complex)
        v[0] = 1.0
    if v is None:
        sig = 0.0
    else:
        block = np.kron(v.conj()[None, :], np.eye(dD)) @ theta.theta \
            @ np.kron(v[:, None], np.eye(dDs))
        sig = spectral_norm(block)
    dth = theta.delta_theta
    shifted = np.hstack([dth @ np.kron(S, np.eye(dDs))
                         for S in theta.fmult_ops()])
    r_full = orth_range(dth).dim
    r_shift = orth_range(shifted).dim
    return PureContractiveReport(sig, sig < 1.0 - tol.check_abs,
                                 r_full, r_shift, r_full == r_shift, False)


def multi_analyticity_check(theta: CharFunData,
                            tol: Tolerances = DEFAULT_TOL):
    """|| Theta (M_i (x) I) - (M_i (x) I) Theta || on the interior, where
    M_i are the coordinate multiplications (compressed when constrained)."""
    dD, dDs = theta.defect_dim, theta.dstar_dim
    if theta.degenerate:
        return (0.0,) * theta.ctx.n
    Q = theta.interior_weight()
    Ql = np.kron(Q, np.eye(dD))
    Qr = np.kron(Q, np.eye(dDs))
    out = []
    for M in theta.model_ops():
        C = theta.theta @ np.kron(M, np.eye(dDs)) - \
            np.kron(M, np.eye(dD)) @ theta.theta
        out.append(spectral_norm(Ql @ C @ Qr))
    return tuple(out)


# ---------------------------------------------------------------------------
# commutative point evaluation
# ---------------------------------------------------------------------------

def commutativity_defect(X: OperatorTuple) -> float:
    worst = 0.0
    for i in range(X.n):
        for j in range(i + 1, X.n):
            worst = max(worst, spectral_norm(X[i] @ X[j] - X[j] @ X[i]))
    return worst


def scalar_tuple_value(F, z) -> np.ndarray:
    """Evaluate each component of a series tuple at a scalar point."""
    mats = [np.array([[complex(zi)]]) for zi in np.asarray(z).ravel()]
    return np.array([evaluate_series(comp, mats)[0, 0] for comp in F])


def commutative_char_at_point(ctx: ModelContext, X: OperatorTuple,
                              D: DefectData, z,
                              tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Theta(z) = -f(T) + Delta (I - sum f_i(z) f_i(T)^H)^{-1}
    [f_1(z) I, ..., f_n(z) I] Delta_*, compressed to the defect frames."""
    if commutativity_defect(X) > tol.check_abs:
        raise NonCommutingTuple("point evaluation needs a commuting tuple")
    fz = scalar_tuple_value(ctx.f, z)
    s = float(np.sum(np.abs(fz) ** 2))
    if s >= 1.0:
        raise PointOutsideDomain(f"sum |f_i(z)|^2 = {s:.6f} >= 1")
    gfz = scalar_tuple_value(ctx.g, scalar_tuple_value(ctx.f, z))
    if np.linalg.norm(gfz - np.asarray(z, dtype=complex).ravel()) > \
            tol.check_abs * 10 + 1e-6:
        raise PointOutsideDomain("g(f(z)) does not return to z")
    m = X.dim
    FX = list(D.fX)
    M = np.eye(m, dtype=complex) - sum(fz[i] * dagger(FX[i])
                                       for i in range(ctx.n))
    row = np.hstack([fz[i] * np.eye(m) for i in range(ctx.n)])
    val = -np.hstack(FX) + D.delta @ np.linalg.solve(M, row) @ D.delta_star
    return dagger(D.frame_D.frame) @ val @ D.frame_Dstar.frame
