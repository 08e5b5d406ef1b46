"""Varieties cut out of the model space by an operator ideal.

An ideal spec names generators (commutators, homogeneous polynomials
composed with f, or explicit polynomials in the f-coordinates).  The
subspace M is the two-sided span closure of the generator columns under
the coordinate multiplications, N is its orthogonal complement, and the
constrained model operators are the compressions B_i = P_N M_{Z_i}|_N
and W_i = P_N Lambda_i|_N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (ModelContext, OperatorTuple, evaluate_series,
                     pure_check)
from .freeseries import NcSeries
from .linalg import (DEFAULT_TOL, Subspace, Tolerances, dagger, orth_range,
                     span_union, spectral_norm)


class IdealIsEverything(ValueError):
    """The closure swallowed the whole truncated space (N = 0)."""


class ConstraintViolated(ValueError):
    """A tuple fed to a constrained operation does not satisfy the ideal."""


# ---------------------------------------------------------------------------
# ideal specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdealSpec:
    """kind 'commutator' needs no polys; 'homogeneous_composed' takes
    homogeneous polynomials applied to the f-coordinates;
    'explicit_generators' takes arbitrary polynomials applied to the
    f-coordinates.  No polys (outside 'commutator') = trivial ideal."""

    kind: str
    polys: tuple = ()

    KINDS = ("commutator", "homogeneous_composed", "explicit_generators")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown ideal kind {self.kind!r}")
        object.__setattr__(self, "polys", tuple(self.polys))
        if self.kind == "homogeneous_composed":
            for q in self.polys:
                lens = {len(w) for w in q.coeffs}
                if len(lens) > 1:
                    raise ValueError("generators must be homogeneous")

    @property
    def trivial(self) -> bool:
        return self.kind != "commutator" and not self.polys


def commutator_ideal() -> IdealSpec:
    return IdealSpec("commutator")


def trivial_ideal() -> IdealSpec:
    return IdealSpec("explicit_generators", ())


def generator_matrices(ctx: ModelContext, ideal: IdealSpec) -> tuple:
    """Generators as matrices on the truncated model space.  Polynomial
    generators are evaluated at the f-multiplications S_i (= f_i(M_Z))."""
    if ideal.kind == "commutator":
        out = []
        for i in range(ctx.n):
            for j in range(i + 1, ctx.n):
                out.append(ctx.MZ[i] @ ctx.MZ[j] - ctx.MZ[j] @ ctx.MZ[i])
        return tuple(out)
    mats = []
    for q in ideal.polys:
        if q.n != ctx.n:
            raise ValueError("generator arity does not match the model")
        if q.max_word_length() > ctx.degree:
            raise ValueError("generator degree exceeds the truncation")
        mats.append(evaluate_series(q, ctx.MF))
    return tuple(mats)


# ---------------------------------------------------------------------------
# variety context
# ---------------------------------------------------------------------------

@dataclass
class VarietyContext:
    model: ModelContext
    ideal: IdealSpec
    N_frame: Subspace
    M_frame: Subspace
    B: tuple
    W: tuple
    contains_vacuum: bool
    generators: tuple
    closure_rounds: int
    top_mass: float

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def dim(self) -> int:
        return self.N_frame.dim

    def interior_weight(self, margin: int = None) -> np.ndarray:
        """Two-sided interior compression in N-coordinates (an exact 0/1
        projector when N is spanned by graded vectors)."""
        if margin is None:
            margin = self.model.model_margin()
        P = self.model.interior(margin).matrix()
        F = self.N_frame.frame
        return dagger(F) @ P @ F


def _graded_split(P, lens, tol: Tolerances) -> np.ndarray:
    """Orthonormal frame for range(P) assembled degree slice by degree
    slice (columns sorted by word length).  Only exact when the subspace
    splits as a direct sum of graded pieces; callers must verify the
    column count against the expected rank."""
    dim = P.shape[0]
    cols = []
    for k in range(int(lens.max()) + 1):
        sel = lens == k
        sub = P[np.ix_(sel, sel)]
        # singular values of a projector restriction live in [0, 1] and are
        # exactly {0, 1} for a graded subspace; a relative rank cut would
        # promote round-off on an all-zero slice, so split at 1/2
        u, s, _ = np.linalg.svd(sub)
        r = int(np.sum(s > 0.5))
        if r:
            lift = np.zeros((dim, r), dtype=complex)
            lift[sel, :] = u[:, :r]
            cols.append(lift)
    if not cols:
        return np.zeros((dim, 0), dtype=complex)
    return np.hstack(cols)


def build_variety(ctx: ModelContext, ideal: IdealSpec,
                  tol: Tolerances = DEFAULT_TOL) -> VarietyContext:
    """Span-close the generator ranges under left multiplication by the
    M_{Z_i} until the rank stabilizes twice; N is the complement, B and W
    the compressions.  Right word multipliers are absorbed into the seed:
    G M_{Z_beta} e_gamma already lies in the column span of G."""
    gens = generator_matrices(ctx, ideal)
    dim = ctx.dim
    if not gens:
        N = Subspace(dim, np.eye(dim, dtype=complex))
        M = Subspace(dim, np.zeros((dim, 0), dtype=complex))
        return VarietyContext(ctx, ideal, N, M, ctx.MZ, ctx.LAM, True,
                              gens, 0, 0.0)
    frame = orth_range(np.hstack(gens), tol)
    rounds, stable = 0, 0
    while stable < 2 and rounds < dim + 2:
        cols = [frame.frame] + [Z @ frame.frame for Z in ctx.MZ]
        grown = span_union(cols, tol)
        stable = stable + 1 if grown.dim == frame.dim else 0
        frame = grown
        rounds += 1
    Msub = frame
    N = Msub.complement()
    if N.dim == 0:
        raise IdealIsEverything("ideal closure fills the truncated space")
    # re-orthogonalize slice by slice: graded ideals give graded M and N,
    # but a plain SVD rotates basis vectors across degenerate singular
    # values, destroying the degree labels the interior compressions use
    lens = np.array([len(w) for w in ctx.fock.words])
    PM = Msub.projector()
    FM = _graded_split(PM, lens, tol)
    FN = _graded_split(np.eye(dim, dtype=complex) - PM, lens, tol)
    if (FM.shape[1] == Msub.dim and FN.shape[1] == N.dim
            and spectral_norm(PM @ FM - FM) <= tol.check_abs
            and spectral_norm(PM @ FN) <= tol.check_abs):
        Msub = Subspace(dim, FM)
        N = Subspace(dim, FN)
    # mass of M within one multiplication of the truncation edge, where
    # further products fall outside degree d and get dropped
    edge = ctx.degree - ctx.model_margin()
    top = np.asarray([1.0 if len(w) > edge else 0.0
                      for w in ctx.fock.words])
    top_mass = float(np.linalg.norm(top[:, None] * Msub.frame, 2)) \
        if Msub.dim else 0.0
    NF = N.frame
    B = tuple(dagger(NF) @ Z @ NF for Z in ctx.MZ)
    W = tuple(dagger(NF) @ L @ NF for L in ctx.LAM)
    vac = ctx.fock.basis_vector(())
    contains_vacuum = float(np.linalg.norm(dagger(Msub.frame) @ vac)) \
        <= tol.check_abs if Msub.dim else True
    return VarietyContext(ctx, ideal, N, Msub, B, W, contains_vacuum,
                          gens, rounds, top_mass)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VanishingReport:
    residuals: tuple
    passed: bool

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def _generator_values(vctx: VarietyContext, mats) -> list:
    """Generator polynomials evaluated at an arbitrary tuple of matrices
    (commutators directly, polynomial generators through f)."""
    ideal = vctx.ideal
    n = vctx.n
    if ideal.kind == "commutator":
        return [mats[i] @ mats[j] - mats[j] @ mats[i]
                for i in range(n) for j in range(i + 1, n)]
    FX = evaluate_series(vctx.model.f, mats)
    return [evaluate_series(q, FX) for q in ideal.polys]


def vanishing_check(vctx: VarietyContext, X: OperatorTuple,
                    tol: Tolerances = DEFAULT_TOL) -> VanishingReport:
    """Does X annihilate the ideal generators (exact matrix evaluation)?"""
    vals = _generator_values(vctx, list(X.T))
    res = tuple(spectral_norm(V) for V in vals)
    return VanishingReport(res, all(r <= tol.check_abs for r in res))


@dataclass(frozen=True)
class UniversalConstraintReport:
    residuals_full: tuple
    residuals_interior: tuple
    margin: int
    passed: bool


def universal_constraint_check(vctx: VarietyContext,
                               tol: Tolerances = DEFAULT_TOL,
                               margin: int = None) -> UniversalConstraintReport:
    """Generators evaluated at the compressed tuple B vanish on the interior."""
    if margin is None:
        margin = vctx.model.model_margin()
    vals = _generator_values(vctx, list(vctx.B))
    Q = vctx.interior_weight(margin)
    full = tuple(spectral_norm(V) for V in vals)
    inner = tuple(spectral_norm(Q @ V @ Q) for V in vals)
    return UniversalConstraintReport(
        full, inner, margin,
        all(r <= tol.check_abs for r in inner) if inner else True)


def constrained_rank_one_identity_check(vctx: VarietyContext, q: NcSeries,
                                        r: NcSeries, xi: np.ndarray) -> float:
    """Residual of  r(B) P_C q(B)^H xi  =  <xi, q(B) 1> r(B) 1  on the
    variety model space.

    P_C = I_N - sum_i f_i(B) f_i(B)^H; because the complement is
    invariant under every coordinate multiplication, compressions
    multiply exactly and P_C is the rank-one projection onto the vacuum
    inside N (which must contain it).
    """
    if not vctx.contains_vacuum:
        raise ConstraintViolated(
            "rank-one identity needs the vacuum inside the model subspace")
    from .domain import _evaluate_one
    B = list(vctx.B)
    fB = [_evaluate_one(fi, B, {}) for fi in vctx.model.f]
    Nd = vctx.N_frame.dim
    Pc = np.eye(Nd, dtype=complex) - sum(F @ dagger(F) for F in fB)
    Q = _evaluate_one(q, B, {})
    R = _evaluate_one(r, B, {})
    one = dagger(vctx.N_frame.frame) @ vctx.model.fock.basis_vector(())
    lhs = R @ Pc @ dagger(Q) @ xi
    rhs = np.vdot(Q @ one, xi) * (R @ one)
    return float(np.linalg.norm(lhs - rhs))


# ---------------------------------------------------------------------------
# von Neumann inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixPoly:
    """sum_alpha A_alpha (x) Z_alpha with k x k matrix coefficients."""

    n: int
    level: int
    terms: tuple   # ((word, k x k array), ...)

    def value(self, mats) -> np.ndarray:
        dim = mats[0].shape[0]
        prods = {(): np.eye(dim, dtype=complex)}

        def prod(w):
            if w not in prods:
                prods[w] = prod(w[:-1]) @ mats[w[-1] - 1]
            return prods[w]

        out = np.zeros((self.level * dim, self.level * dim), dtype=complex)
        for w, A in self.terms:
            out += np.kron(A, prod(w))
        return out


def matrix_poly_from_series(q: NcSeries) -> MatrixPoly:
    return MatrixPoly(q.n, 1, tuple((w, np.array([[c]], dtype=complex))
                                    for w, c in q.coeffs.items()))


def random_matrix_poly(n: int, level: int, max_deg: int, rng,
                       words_per_degree: int = 2) -> MatrixPoly:
    from .freeseries import words_of_length
    terms = []
    for k in range(max_deg + 1):
        pool = words_of_length(n, k)
        take = min(len(pool), words_per_degree)
        for idx in rng.choice(len(pool), size=take, replace=False):
            A = rng.standard_normal((level, level)) \
                + 1j * rng.standard_normal((level, level))
            terms.append((pool[int(idx)], A))
    return MatrixPoly(n, level, tuple(terms))


@dataclass(frozen=True)
class VonNeumannReport:
    lhs: float
    rhs: float
    level: int
    slack: float
    passed: bool


def von_neumann_inequality_check(vctx: VarietyContext, X: OperatorTuple,
                                 polys, level: int = 1,
                                 tol: Tolerances = DEFAULT_TOL,
                                 margin: int = None) -> VonNeumannReport:
    """|| [q_1(X), ..., q_m(X)] || <= || [q_1(B), ..., q_m(B)] || + tol,
    with the B side interior-compressed; k x k matrix coefficients give
    the matrix-level form of the inequality."""
    if margin is None:
        margin = vctx.model.model_margin()
    mp = [matrix_poly_from_series(q) if isinstance(q, NcSeries) else q
          for q in polys]
    for q in mp:
        if q.level != level:
            raise ValueError("matrix coefficient size does not match level")
    pr = pure_check(vctx.model, X, tol)
    van = vanishing_check(vctx, X, tol)
    if not (pr.pure and van.passed):
        raise ConstraintViolated(
            f"inequality needs a pure, vanishing tuple (pure={pr.pure}, "
            f"vanishing residual {van.max_residual:.3e})")
    lhs = spectral_norm(np.hstack([q.value(list(X.T)) for q in mp]))
    Q = np.kron(np.eye(level), vctx.interior_weight(margin))
    rhs = spectral_norm(np.hstack([Q @ q.value(list(vctx.B)) @ Q for q in mp]))
    return VonNeumannReport(lhs, rhs, level, rhs + tol.check_abs - lhs,
                            lhs <= rhs + tol.check_abs)
