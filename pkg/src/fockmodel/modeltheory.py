"""Model spaces built from characteristic functions.

The ambient space is (basis x defect) stacked with an orthonormal frame
for the range of the defect operator Delta_Theta; the model tuple is the
compression of the block operators

    V_i = (M_{Z_i} (x) I_D)  (+)  D_i,    D_i Delta_Theta = Delta_Theta (M_{Z_i} (x) I)

to H = ambient minus the graph {Theta x (+) Delta_Theta x}.  When Theta is
inner on the interior the second summand is empty and the model reduces
to H = (basis (x) D) minus range(Theta).  A trace oracle certifies
unitary equivalence of reconstructed tuples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .charfun import (CharFunData, CoincidenceReport,
                      characteristic_function,
                      constrained_characteristic_function, coincide,
                      multi_analyticity_check, purely_contractive_check)
from .domain import (DefectData, ModelContext, OperatorTuple,
                     membership_check, pure_check)
from .linalg import (DEFAULT_TOL, Subspace, Tolerances, dagger, orth_range,
                     spectral_norm)


class NotContractive(ValueError):
    """The characteristic matrix has norm above 1 + check_abs."""


class DOperatorInconsistent(ValueError):
    """The defect range is not invariant under the shifted action at this
    truncation; the least-squares realization of D_i failed."""


class NotMultiAnalytic(ValueError):
    """The given matrix does not commute with the shifted coordinate
    multiplications on the interior."""


class DimensionMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# model space
# ---------------------------------------------------------------------------

@dataclass
class ModelSpaceData:
    theta: CharFunData
    ambient_dim: int          # dim (basis x D) + defect-range rank
    range_rank: int
    graph_frame: Subspace
    H_frame: Subspace
    Tt: tuple                 # n compressed operators on H
    mode: str                 # "pure" / "general" / "degenerate"
    d_residual: float         # worst D_i residual / spectral split defect

    @property
    def dim(self) -> int:
        return self.H_frame.dim


def _empty_model(theta) -> ModelSpaceData:
    nothing = Subspace(0, np.zeros((0, 0), dtype=complex))
    zero = np.zeros((0, 0), dtype=complex)
    return ModelSpaceData(theta, 0, 0, nothing, nothing,
                          tuple(zero for _ in range(theta.ctx.n)),
                          "degenerate", 0.0)


def build_model_space(theta: CharFunData, tol: Tolerances = DEFAULT_TOL,
                      force_general: bool = False) -> ModelSpaceData:
    """Model space and compressed tuple of a contractive multi-analytic
    characteristic function.

    The defect square I - Theta^H Theta is interior-compressed before
    factoring, so truncation junk at the top degrees does not inflate the
    defect-range summand; its rank keeps eigenvalues above check_abs
    (an absolute cut -- the matrix is bounded by 1 in norm).
    """
    if theta.degenerate:
        return _empty_model(theta)
    Th = theta.theta
    nrm = spectral_norm(Th)
    if nrm > 1.0 + tol.check_abs:
        raise NotContractive(f"||Theta|| = {nrm:.6f} > 1")
    ops = theta.model_ops()
    dD, dDs = theta.defect_dim, theta.dstar_dim
    Bd = theta.basis_dim
    # When the tuple behind Theta is pure, Theta Theta^H is a projection
    # up to the pure tail, so its spectrum splits cleanly at 1/2: the
    # eigenspace near 0 is the model space and the eigenspace near 1 is
    # the range of Theta.  Taking the spectral split (rather than an
    # SVD range at a relative rank cut) keeps tail-sized junk from
    # stealing genuine model directions.
    TTh = Th @ dagger(Th)
    w, U = np.linalg.eigh((TTh + dagger(TTh)) / 2)
    split_defect = float(np.minimum(np.abs(w), np.abs(1.0 - w)).max()) \
        if w.size else 0.0

    if split_defect <= 0.1 and not force_general:
        low = w < 0.5
        ran = Subspace(Bd * dD, U[:, ~low])
        H = Subspace(Bd * dD, U[:, low])
        HF = H.frame
        Tt = tuple(dagger(HF) @ np.kron(M, np.eye(dD)) @ HF for M in ops)
        return ModelSpaceData(theta, Bd * dD, 0, ran, H, Tt, "pure",
                              split_defect)

    margin = max(theta.margin, theta.symbol_spread())
    Q = np.kron(theta.interior_weight(margin), np.eye(dDs))
    Dsq = Q @ (np.eye(Bd * dDs) - dagger(Th) @ Th) @ Q
    w, U = np.linalg.eigh((Dsq + dagger(Dsq)) / 2)
    keep = w > tol.check_abs
    rank = int(keep.sum())
    R = U[:, keep]
    RD = np.sqrt(w[keep])[:, None] * dagger(R)       # R^H Delta_Theta
    Ds, worst = [], 0.0
    for M in ops:
        tgt = RD @ np.kron(M, np.eye(dDs))
        sol, _, _, _ = np.linalg.lstsq(RD.T, tgt.T, rcond=tol.rank_rel)
        res = spectral_norm(RD.T @ sol - tgt.T)
        worst = max(worst, res)
        Ds.append(sol.T)
    if worst > tol.check_abs:
        raise DOperatorInconsistent(
            f"defect-range solve residual {worst:.3e}: the range of "
            "Delta_Theta is not invariant under the shifted multiplications "
            f"at truncation degree {theta.ctx.degree}; rebuild with a higher "
            "degree (larger interior margin) before trusting the model")
    graph = orth_range(np.vstack([Th, RD]), tol)
    H = graph.complement()
    HF = H.frame
    Tt = tuple(dagger(HF) @ block_diag(np.kron(M, np.eye(dD)), Ds[i]) @ HF
               for i, M in enumerate(ops))
    return ModelSpaceData(theta, Bd * dD + rank, rank, graph, H, Tt,
                          "general", worst)


# ---------------------------------------------------------------------------
# trace oracle
# ---------------------------------------------------------------------------

WORD_CAP = 120_000     # largest (2n)^L level enumerated in one batch


@dataclass(frozen=True)
class SpechtReport:
    equivalent: bool
    L_requested: int
    L_used: int
    capped: bool
    max_deviation: float
    first_mismatch: tuple     # letters 1..n for X_i, -i for X_i^H; None if none
    cmp_tol: float


def specht_equivalence(X: OperatorTuple, Y: OperatorTuple, L: int = None,
                       tol: Tolerances = DEFAULT_TOL,
                       cmp_tol: float = None) -> SpechtReport:
    """Compare trace(w(X, X^H)) against trace(w(Y, Y^H)) over all words w
    of length <= L in the 2n letters; agreement certifies unitary
    equivalence up to the classical word-length bound, any mismatch
    certifies inequivalence."""
    if X.dim != Y.dim:
        raise DimensionMismatch(f"dims differ: {X.dim} vs {Y.dim}")
    if X.n != Y.n:
        raise DimensionMismatch(f"arities differ: {X.n} vs {Y.n}")
    if L is None:
        L = 2 * X.dim
    if cmp_tol is None:
        cmp_tol = tol.check_abs
    m, n = X.dim, X.n
    lx = np.stack(list(X.T) + [dagger(T) for T in X.T])
    ly = np.stack(list(Y.T) + [dagger(T) for T in Y.T])
    levX = np.eye(m, dtype=complex)[None, :, :]
    levY = np.eye(m, dtype=complex)[None, :, :]
    max_dev, first, L_used, capped = 0.0, None, 0, False
    for ell in range(1, L + 1):
        if levX.shape[0] * 2 * n > WORD_CAP:
            capped = True
            break
        levX = np.einsum("pij,ljk->plik", levX, lx).reshape(-1, m, m)
        levY = np.einsum("pij,ljk->plik", levY, ly).reshape(-1, m, m)
        trX = np.trace(levX, axis1=1, axis2=2)
        trY = np.trace(levY, axis1=1, axis2=2)
        dev = np.abs(trX - trY)
        k = int(np.argmax(dev))
        if dev[k] > max_dev:
            max_dev = float(dev[k])
        if first is None and dev[k] > cmp_tol:
            first = _decode_word(k, ell, n)
        L_used = ell
    return SpechtReport(first is None, L, L_used, capped, max_dev, first,
                        cmp_tol)


def _decode_word(index: int, length: int, n: int) -> tuple:
    """Invert the level enumeration: digit j < n means X_{j+1}, digit
    j >= n means X_{j-n+1}^H; earliest letter is the highest digit."""
    digits = []
    for _ in range(length):
        digits.append(index % (2 * n))
        index //= 2 * n
    out = []
    for dgt in reversed(digits):
        out.append(dgt + 1 if dgt < n else -(dgt - n + 1))
    return tuple(out)


# ---------------------------------------------------------------------------
# reconstruction round trip
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReconstructionReport:
    dim_original: int
    dim_model: int
    mode: str
    pure: bool
    specht: SpechtReport      # None when the dimensions already disagree
    passed: bool


def reconstruct_and_compare(ctx: ModelContext, X: OperatorTuple,
                            tol: Tolerances = DEFAULT_TOL,
                            variety=None,
                            cmp_tol: float = 1e-7) -> ReconstructionReport:
    """Characteristic function -> model space -> trace comparison of the
    compressed tuple against X."""
    pr = pure_check(ctx, X, tol)
    if variety is None:
        theta = characteristic_function(ctx, X, tol=tol)
    else:
        theta = constrained_characteristic_function(variety, X, tol=tol)
    model = build_model_space(theta, tol)
    if model.dim != X.dim:
        return ReconstructionReport(X.dim, model.dim, model.mode, pr.pure,
                                    None, False)
    rep = specht_equivalence(X, OperatorTuple(model.Tt), L=2 * X.dim,
                             tol=tol, cmp_tol=cmp_tol)
    return ReconstructionReport(X.dim, model.dim, model.mode, pr.pure, rep,
                                rep.equivalent)


# ---------------------------------------------------------------------------
# realization of a raw multi-analytic matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaRealization:
    T: OperatorTuple
    model: ModelSpaceData
    purely_contractive: object
    coincidence: CoincidenceReport     # None when the verification is skipped
    skip_reason: str


def _wrap_raw_theta(ctx: ModelContext, theta: np.ndarray,
                    tol: Tolerances) -> CharFunData:
    from .linalg import hermitian_psd_sqrt
    theta = np.asarray(theta, dtype=complex)
    Bd = ctx.dim
    if theta.shape[0] % Bd or theta.shape[1] % Bd:
        raise DimensionMismatch(
            f"matrix shape {theta.shape} is not a multiple of the basis "
            f"dimension {Bd}")
    nrm = spectral_norm(theta)
    if nrm > 1.0 + tol.check_abs:      # before the defect square root
        raise NotContractive(f"||Theta|| = {nrm:.6f} > 1")
    e, es = theta.shape[0] // Bd, theta.shape[1] // Bd
    D = DefectData(np.eye(e, dtype=complex), np.eye(es, dtype=complex),
                   Subspace(e, np.eye(e, dtype=complex)),
                   Subspace(es, np.eye(es, dtype=complex)), None)
    dth = hermitian_psd_sqrt(np.eye(Bd * es) - dagger(theta) @ theta, tol)
    return CharFunData(theta, dth, ctx, None, D, False, None, Bd,
                       ctx.model_margin() + 1)


def tuple_from_theta(ctx: ModelContext, theta: np.ndarray,
                     tol: Tolerances = DEFAULT_TOL) -> ThetaRealization:
    """Model tuple of a raw contractive multi-analytic matrix on
    basis (x) C^e* -> basis (x) C^e; when the matrix is purely contractive
    and satisfies the defect range condition, the characteristic function
    of the output is checked to coincide with the input."""
    wrapped = _wrap_raw_theta(ctx, theta, tol)
    nrm = spectral_norm(wrapped.theta)
    if nrm > 1.0 + tol.check_abs:
        raise NotContractive(f"||Theta|| = {nrm:.6f} > 1")
    residuals = multi_analyticity_check(wrapped, tol)
    if max(residuals, default=0.0) > tol.check_abs:
        raise NotMultiAnalytic(
            f"interior intertwining residuals {tuple(f'{r:.2e}' for r in residuals)}")
    model = build_model_space(wrapped, tol)
    T = OperatorTuple(model.Tt)
    pc = purely_contractive_check(wrapped, tol)
    if not (pc.purely_contractive and pc.range_condition):
        return ThetaRealization(T, model, pc, None,
                                "not purely contractive with full defect range")
    mem = membership_check(ctx, T, tol)
    if not mem.ok:
        return ThetaRealization(T, model, pc, None,
                                "model tuple left the domain at truncation")
    theta_T = characteristic_function(ctx, T, tol=tol)
    if (theta_T.defect_dim, theta_T.dstar_dim) != (wrapped.defect_dim,
                                                   wrapped.dstar_dim):
        return ThetaRealization(T, model, pc, None,
                                "defect ranks differ at truncation")
    co = coincide(theta_T, wrapped, tol=tol)
    return ThetaRealization(T, model, pc, co, "")
