"""Factorization of invariant subspaces and commutant lifting.

An invariant subspace of the constrained model (under the compressed
coordinates tensored with a multiplicity space) lifts to a
creation-invariant subspace of the full space; its wandering subspace
generates a multi-analytic partial isometry whose range recovers the
subspace.  The lifting solver treats the interpolation problem — extend
an operator intertwining two co-invariant compressions to a commutant
element of no larger norm — as a structured spectral-norm minimization:
bisection on the target norm with alternating projections between the
affine constraint set (a closed-form least-squares step) and the
norm ball (singular-value clipping).
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import (Tolerances, DEFAULT_TOL, Subspace, dagger, orth_range,
                     span_union, spectral_norm)
from .variety import VarietyContext


class NotInvariant(ValueError):
    """The subspace is not invariant under the compressed coordinates."""


class WanderingDegenerate(ValueError):
    """Wandering subspace has rank zero for a nonzero input subspace
    (truncation margin too small to see a generator)."""


class Infeasible(ValueError):
    """Constraint projection stalled above the optimization tolerance;
    at this truncation the lifting problem has no visible solution
    (margin too small)."""


@dataclass(frozen=True)
class BeurlingFactorization:
    G_dim: int                    # multiplicity space dimension
    theta: np.ndarray             # N (x) G  ->  N (x) K
    wandering_frame: Subspace     # inside the lifted space Fock (x) K
    residual: float               # || P_M - theta theta^H ||
    partial_isometry_defect: float


def beurling_factor(vctx: VarietyContext, M_frame: Subspace,
                    tol: Tolerances = DEFAULT_TOL) -> BeurlingFactorization:
    """Factor an invariant subspace M of N (x) K through a multi-analytic
    partial isometry.

    M is lifted to E = (ideal subspace (x) K) + M inside Fock (x) K,
    which is invariant under the free creations; the wandering subspace
    W = E - sum_i (S_i (x) I) E generates E exactly at truncation, and
    the compression of the word map e_alpha (x) w |-> (S_alpha (x) I) w
    back to the model gives theta with theta theta^H = P_M.
    """
    ctx = vctx.model
    Nd = vctx.dim
    Bd = ctx.fock.dim
    if M_frame.ambient_dim % Nd:
        raise ValueError("subspace ambient is not a multiple of the model dim")
    k = M_frame.ambient_dim // Nd
    Mf = M_frame.frame
    PM = M_frame.projector()
    amb = Nd * k
    for i in range(vctx.n):
        Bi = np.kron(vctx.B[i], np.eye(k))
        res = spectral_norm((np.eye(amb) - PM) @ Bi @ PM)
        if res > tol.check_abs:
            raise NotInvariant(
                f"subspace moves under coordinate {i} ({res:.3e})")

    FN = vctx.N_frame.frame
    Mfull = np.kron(FN, np.eye(k)) @ Mf
    pieces = [Mfull]
    if vctx.M_frame.dim:
        pieces.insert(0, np.kron(vctx.M_frame.frame, np.eye(k)))
    Eframe = np.hstack(pieces)
    S = [np.kron(Si, np.eye(k)) for Si in ctx.MF]
    PE = Eframe @ dagger(Eframe)
    P = ctx.interior(ctx.model_margin())
    for i in range(vctx.n):
        leak = P.left_mask_kron(
            (np.eye(Bd * k) - PE) @ S[i] @ PE, k)
        res = spectral_norm(leak)
        if res > tol.check_abs:
            raise NotInvariant(
                f"lifted subspace leaks under creation {i} ({res:.3e})")

    shifted = span_union([Si @ Eframe for Si in S], tol)
    W = orth_range((np.eye(Bd * k) - shifted.projector()) @ Eframe, tol)
    # deterministic phases: rotate each wandering vector so its largest
    # component is real positive (theta is otherwise only fixed up to a
    # unitary on the multiplicity space)
    WF = W.frame.copy()
    for j in range(WF.shape[1]):
        piv = WF[np.argmax(np.abs(WF[:, j])), j]
        if abs(piv) > 0:
            WF[:, j] *= np.conj(piv) / abs(piv)
    W = Subspace(W.ambient_dim, WF)
    g = W.dim
    if g == 0:
        if M_frame.dim == 0:
            theta = np.zeros((Nd * k, 0), dtype=complex)
            return BeurlingFactorization(0, theta, W, 0.0, 0.0)
        raise WanderingDegenerate(
            "no wandering vectors at this truncation for a nonzero subspace")

    # Psi column block at word alpha: (S_alpha (x) I) applied to the
    # wandering frame, peeled by the leading letter
    blocks = {(): W.frame}

    def blk(w):
        if w not in blocks:
            blocks[w] = S[w[0] - 1] @ blk(w[1:])
        return blocks[w]

    Psi = np.hstack([blk(w) for w in ctx.fock.words])
    theta = np.kron(dagger(FN), np.eye(k)) @ Psi @ np.kron(FN, np.eye(g))
    residual = spectral_norm(PM - theta @ dagger(theta))
    TT = dagger(theta) @ theta
    pi_defect = spectral_norm(TT @ TT - TT)
    return BeurlingFactorization(g, theta, W, residual, pi_defect)


# ---------------------------------------------------------------------------
# commutant lifting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftingProblem:
    vctx: VarietyContext
    K1_dim: int
    K2_dim: int
    E1_frame: Subspace            # co-invariant in N (x) K1
    E2_frame: Subspace            # co-invariant in N (x) K2
    X: np.ndarray                 # E1 -> E2 in frame coordinates
    max_iter: int = 400
    opt_tol: float = DEFAULT_TOL.opt_tol

    def compressions(self):
        """P_{E_j} (B_i (x) I)|_{E_j} for both sides."""
        B = self.vctx.B
        T1 = tuple(dagger(self.E1_frame.frame)
                   @ np.kron(Bi, np.eye(self.K1_dim)) @ self.E1_frame.frame
                   for Bi in B)
        T2 = tuple(dagger(self.E2_frame.frame)
                   @ np.kron(Bi, np.eye(self.K2_dim)) @ self.E2_frame.frame
                   for Bi in B)
        return T1, T2


def validate_problem(p: LiftingProblem, tol: Tolerances = DEFAULT_TOL):
    """Dimension and hypothesis checks: co-invariance of both frames and
    the intertwining of X with the compressions."""
    Nd = p.vctx.dim
    if p.E1_frame.ambient_dim != Nd * p.K1_dim or \
            p.E2_frame.ambient_dim != Nd * p.K2_dim:
        raise ValueError("frame ambients do not match N (x) K dims")
    if p.X.shape != (p.E2_frame.dim, p.E1_frame.dim):
        raise ValueError("X must map E1 coordinates to E2 coordinates")
    for Ef, kk, label in ((p.E1_frame, p.K1_dim, "E1"),
                          (p.E2_frame, p.K2_dim, "E2")):
        PEf = Ef.projector()
        amb = Ef.ambient_dim
        for i in range(p.vctx.n):
            Bi = np.kron(p.vctx.B[i], np.eye(kk))
            res = spectral_norm((np.eye(amb) - PEf) @ dagger(Bi) @ PEf)
            if res > tol.check_abs:
                raise NotInvariant(
                    f"{label} is not co-invariant under coordinate {i} "
                    f"({res:.3e})")
    T1, T2 = p.compressions()
    worst = max(spectral_norm(p.X @ T1[i] - T2[i] @ p.X)
                for i in range(p.vctx.n))
    if worst > tol.check_abs:
        raise ValueError(f"X does not intertwine the compressions ({worst:.3e})")


@dataclass(frozen=True)
class LiftResult:
    G: np.ndarray
    norm_G: float
    norm_X: float
    eps_lift: float               # norm_G / norm_X - 1 (0 when norm_X = 0)
    intertwine_residual: float
    compression_residual: float
    bisection_steps: int
    converged: bool


def _interior_selector(vctx: VarietyContext, k: int) -> np.ndarray:
    """0/1 row selector onto interior-degree N-frame coordinates (x) K."""
    lens = np.array([len(w) for w in vctx.model.fock.words])
    F = vctx.N_frame.frame
    deg = np.array([int(lens[np.abs(F[:, j]) > 1e-10].max())
                    for j in range(F.shape[1])])
    cut = vctx.model.degree - vctx.model.model_margin()
    keep = np.repeat(deg <= cut, k)
    sel = np.zeros((int(keep.sum()), keep.size))
    sel[np.arange(int(keep.sum())), np.flatnonzero(keep)] = 1.0
    return sel


def commutant_lift(problem: LiftingProblem,
                   tol: Tolerances = DEFAULT_TOL) -> LiftResult:
    """Minimal-norm commutant element compressing to X.

    The constraints are linear: interior-compressed intertwining with
    every B_i (x) I, and exact compression between the frames.  For a
    candidate norm bound t the solver alternates between singular-value
    clipping onto the t-ball and the least-squares projection onto the
    affine constraint set; bisection drives t toward ||X||.
    """
    validate_problem(problem, tol)
    p = problem
    Nd = p.vctx.dim
    d2, d1 = Nd * p.K2_dim, Nd * p.K1_dim
    nX = spectral_norm(p.X)
    E1, E2 = p.E1_frame.frame, p.E2_frame.frame

    R2 = _interior_selector(p.vctx, p.K2_dim)
    R1 = _interior_selector(p.vctx, p.K1_dim)
    rows = []
    for i in range(p.vctx.n):
        B1 = np.kron(p.vctx.B[i], np.eye(p.K1_dim))
        B2 = np.kron(p.vctx.B[i], np.eye(p.K2_dim))
        rows.append(np.kron(R2 @ B2, R1) - np.kron(R2, R1 @ B1.T))
    rows.append(np.kron(dagger(E2), E1.T))
    L = np.vstack(rows)
    b = np.concatenate([np.zeros(L.shape[0] - p.X.size, dtype=complex),
                        p.X.reshape(-1)])
    Lp = np.linalg.pinv(L, rcond=tol.rank_rel)
    G0 = (Lp @ b).reshape(d2, d1)     # least-norm feasible point

    def clip(G, t):
        u, s, vh = np.linalg.svd(G, full_matrices=False)
        return (u * np.minimum(s, t)) @ vh

    def settle(t, G):
        """Alternate ball-clip and affine projection; return (G, residual)."""
        best = np.inf
        for _ in range(p.max_iter):
            Gc = clip(G, t)
            r = L @ Gc.reshape(-1) - b
            res = float(np.linalg.norm(r))
            if res < best:
                best = res
            if res <= p.opt_tol:
                return Gc, res
            G = (Gc.reshape(-1) - Lp @ r).reshape(d2, d1)
        return G, best

    if nX == 0.0:
        G = np.zeros((d2, d1), dtype=complex)
        return LiftResult(G, 0.0, 0.0, 0.0, 0.0, 0.0, 0, True)

    t_lo, t_hi = nX, 2.0 * nX
    G_hi, res_hi = settle(t_hi, G0)
    if res_hi > p.opt_tol:
        raise Infeasible(
            "constraint projection stalled at residual "
            f"{res_hi:.3e} (> {p.opt_tol:.1e}); truncation margin too small")
    best_G = G_hi
    steps = 0
    while t_hi - t_lo > max(p.opt_tol, 1e-9) * max(1.0, nX) and steps < 60:
        t_mid = 0.5 * (t_lo + t_hi)
        G_mid, res_mid = settle(t_mid, best_G)
        if res_mid <= p.opt_tol:
            t_hi, best_G = t_mid, G_mid
        else:
            t_lo = t_mid
        steps += 1

    G = best_G
    nG = spectral_norm(G)
    inter = max(spectral_norm(
        R2 @ (np.kron(p.vctx.B[i], np.eye(p.K2_dim)) @ G
              - G @ np.kron(p.vctx.B[i], np.eye(p.K1_dim))) @ R1.T)
        for i in range(p.vctx.n))
    comp = spectral_norm(dagger(E2) @ G @ E1 - p.X)
    eps = nG / nX - 1.0
    ok = max(inter, comp) <= p.opt_tol * 10
    return LiftResult(G, nG, nX, eps, inter, comp, steps, ok)
