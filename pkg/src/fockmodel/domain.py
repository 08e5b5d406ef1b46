"""The model space H^2(f) and the unit domain attached to a series tuple f.

H^2(f) is carried on the truncated Fock space through the canonical
identification f_alpha <-> e_alpha, which makes multiplication by f_i the
left creation S_i, right multiplication by f_i the right creation R_i, and
multiplication by the coordinate Z_i the matrix g_i(S) where g is the
compositional inverse of f.

For an operator tuple X = (X_1, ..., X_n) on C^m the module evaluates
series at X, tests membership in the unit domain (g(f(X)) = X and
||row f(X)|| <= 1), classifies purity / complete non-coisometry by
iterating the completely positive map Y -> sum f_i(X) Y f_i(X)^H, and
computes the two defect operators and their range frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fock as fk
from .freeseries import (NcSeries, NcSeriesTuple, invert_composition)
from .linalg import (DEFAULT_TOL, Subspace, Tolerances, ascomplex, dagger,
                     hermitian_psd_sqrt, orth_range, spectral_norm)


# ---------------------------------------------------------------------------
# operator tuples
# ---------------------------------------------------------------------------

@dataclass
class OperatorTuple:
    """n square matrices acting on the same C^dim."""

    T: tuple

    def __post_init__(self):
        mats = tuple(ascomplex(M) for M in self.T)
        dim = mats[0].shape[0]
        for M in mats:
            if M.shape != (dim, dim):
                raise ValueError("components must be square of equal size")
        self.T = mats

    @property
    def dim(self) -> int:
        return self.T[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.T)

    def __getitem__(self, i):
        return self.T[i]

    def __iter__(self):
        return iter(self.T)

    def row_norm(self) -> float:
        """Norm of the row operator [X_1, ..., X_n] : (C^dim)^n -> C^dim."""
        return spectral_norm(np.hstack(self.T))

    @staticmethod
    def zero(n: int, dim: int) -> "OperatorTuple":
        return OperatorTuple(tuple(np.zeros((dim, dim), dtype=complex)
                                   for _ in range(n)))


def cp_map(mats, Y) -> np.ndarray:
    """The completely positive map Y -> sum_i M_i Y M_i^H."""
    out = np.zeros_like(np.asarray(Y, dtype=complex))
    for M in mats:
        out += M @ Y @ dagger(M)
    return out


def joint_nilpotency_order(mats, max_power: int, eps: float = 0.0):
    """Least m <= max_power with all length-m products zero, else None.

    Uses Phi^m(I) = sum_{|alpha|=m} X_alpha X_alpha^H, which vanishes iff
    every word product of length m does.
    """
    dim = mats[0].shape[0]
    Y = np.eye(dim, dtype=complex)
    for m in range(1, max_power + 1):
        Y = cp_map(mats, Y)
        if spectral_norm(Y) <= eps:
            return m
    return None


# ---------------------------------------------------------------------------
# series evaluation
# ---------------------------------------------------------------------------

def evaluate_series(F, mats):
    """Evaluate a series (or tuple) at matrices: sum_{|alpha|<=d} a_alpha X_alpha.

    Exact when the X_i are jointly nilpotent of order <= d; otherwise the
    dropped tail is advisory (see evaluation_tail_bound).
    """
    if isinstance(F, NcSeriesTuple):
        cache = {}
        return tuple(_evaluate_one(f, mats, cache) for f in F)
    return _evaluate_one(F, mats, {})


def _evaluate_one(f: NcSeries, mats, cache) -> np.ndarray:
    mats = [ascomplex(M) for M in mats]
    if len(mats) != f.n:
        raise ValueError(f"series needs {f.n} matrices, got {len(mats)}")
    dim = mats[0].shape[0]
    cache.setdefault((), np.eye(dim, dtype=complex))

    def prod(w):
        if w not in cache:
            cache[w] = prod(w[:-1]) @ mats[w[-1] - 1]
        return cache[w]

    out = np.zeros((dim, dim), dtype=complex)
    for w, c in f.coeffs.items():
        out += c * prod(w)
    return out


def evaluation_tail_bound(F, mats) -> float:
    """Crude sound majorant of the dropped tail: per-degree l1 coefficient
    norms times row-norm powers, extrapolated at the top degree ratio.
    Advisory only; zero when the matrices are jointly nilpotent of order <= d.
    """
    if isinstance(F, NcSeries):
        F = NcSeriesTuple((F,)) if F.n == 1 else None
        if F is None:
            raise ValueError("tail bound wants a tuple or an n=1 series")
    mats = [ascomplex(M) for M in mats]
    d = F.degree
    if joint_nilpotency_order(mats, d + 1, eps=1e-300) is not None:
        return 0.0
    r = spectral_norm(np.hstack(mats))
    l1 = [0.0] * (d + 1)
    for f in F:
        for w, c in f.coeffs.items():
            l1[len(w)] += abs(c)
    # geometric continuation of the last nonzero l1 slice
    tail = 0.0
    top = max((k for k in range(d + 1) if l1[k] > 0), default=0)
    if top > 0 and r < 1.0:
        tail = l1[top] * r ** (top + 1) / (1.0 - r)
    elif r >= 1.0:
        tail = float("inf")
    return tail


# ---------------------------------------------------------------------------
# the universal model
# ---------------------------------------------------------------------------

@dataclass
class ModelContext:
    """Universal model of the unit domain of f on the truncated Fock space.

    MZ[i] = g_i(S) is multiplication by the coordinate Z_i, MF[i] = S_i is
    multiplication by f_i, LAM[i] = R_i is right multiplication by f_i.
    """

    fock: fk.FockContext
    f: NcSeriesTuple
    g: NcSeriesTuple
    MZ: tuple
    MF: tuple
    LAM: tuple
    class_assertion: str = "unasserted"

    @property
    def n(self) -> int:
        return self.fock.n

    @property
    def degree(self) -> int:
        return self.fock.degree

    @property
    def dim(self) -> int:
        return self.fock.dim

    def model_tuple(self) -> OperatorTuple:
        return OperatorTuple(self.MZ)

    def coordinate_gram(self) -> np.ndarray:
        """Gram matrix G[i, j] = <Z_j, Z_i> = sum_alpha conj(a^i_alpha) a^j_alpha
        over the coefficients of the inverse tuple g (Z_i = sum a^i_alpha f_alpha)."""
        n = self.n
        G = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                words = set(self.g[i].coeffs) | set(self.g[j].coeffs)
                G[i, j] = sum(np.conj(self.g[i].coeff(w)) * self.g[j].coeff(w)
                              for w in words)
        return G

    def interior(self, margin: int) -> fk.GradedProjector:
        return fk.interior(self.fock, min(margin, self.degree))

    def model_margin(self) -> int:
        """Margin that makes f(M_Z) = S and the coordinate Gram identity exact:
        the stored word length of the inverse tuple g."""
        return min(self.degree, max(1, self.g.max_word_length()))


def build_model(f: NcSeriesTuple, tol: Tolerances = DEFAULT_TOL,
                g: NcSeriesTuple = None,
                class_assertion: str = "unasserted") -> ModelContext:
    """Universal model matrices for the domain of f.

    g may be supplied (checked) or is computed by compositional inversion;
    M_{Z_i} = g_i(S) is a finite sum because truncated creations are
    nilpotent.
    """
    if g is None:
        g = invert_composition(f, tol)
    ctx = fk.fock_context(f.n, f.degree)
    S = fk.creation_tuple(ctx)
    R = fk.right_creation_tuple(ctx)
    MZ = evaluate_series(g, S)
    return ModelContext(fock=ctx, f=f, g=g, MZ=tuple(MZ), MF=S, LAM=R,
                        class_assertion=class_assertion)


# ---------------------------------------------------------------------------
# membership / purity / cnc diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MembershipReport:
    residuals: tuple       # || g_i(f(X)) - X_i || per component
    row_norm: float        # || [f_1(X), ..., f_n(X)] ||
    verdict: str           # inside / boundary / outside
    exact: bool            # jointly nilpotent input => polynomial identities exact
    tail_bound: float

    @property
    def ok(self) -> bool:
        return self.verdict in ("inside", "boundary")


def membership_check(ctx: ModelContext, X: OperatorTuple,
                     tol: Tolerances = DEFAULT_TOL) -> MembershipReport:
    """Does X lie in the unit domain of f: g(f(X)) = X and ||row f(X)|| <= 1?"""
    FX = evaluate_series(ctx.f, X.T)
    GFX = evaluate_series(ctx.g, FX)
    residuals = tuple(spectral_norm(GFX[i] - X[i]) for i in range(ctx.n))
    row = spectral_norm(np.hstack(FX))
    nilpotent = joint_nilpotency_order(list(X.T), ctx.degree + 1, eps=1e-300) is not None
    tail = 0.0 if nilpotent else evaluation_tail_bound(ctx.f, X.T)
    if max(residuals) > tol.check_abs + (0.0 if nilpotent else tail) or \
            row > 1.0 + tol.check_abs:
        verdict = "outside"
    elif abs(row - 1.0) <= tol.check_abs:
        verdict = "boundary"
    else:
        verdict = "inside"
    return MembershipReport(residuals, row, verdict, nilpotent, tail)


@dataclass(frozen=True)
class PureReport:
    powers: tuple          # r_k = || Phi^k(I) || for computed k
    max_power: int
    pure: bool
    label: str             # "certificate" (nilpotent, exact) or "diagnostic"


def pure_check(ctx: ModelContext, X: OperatorTuple,
               tol: Tolerances = DEFAULT_TOL, max_power: int = 200) -> PureReport:
    """Decay of r_k = ||sum_{|alpha|=k} f(X)_alpha f(X)_alpha^H||.

    Pure verdict iff the final power is <= check_abs.  Exact certificate
    only for jointly nilpotent input; otherwise a diagnostic at power K.
    """
    FX = [np.asarray(M) for M in evaluate_series(ctx.f, X.T)]
    Y = np.eye(X.dim, dtype=complex)
    powers = []
    for _ in range(max_power):
        Y = cp_map(FX, Y)
        powers.append(spectral_norm(Y))
        if powers[-1] == 0.0 or powers[-1] <= 1e-16:
            break
    label = "certificate" if powers[-1] == 0.0 else "diagnostic"
    return PureReport(tuple(powers), len(powers),
                      powers[-1] <= tol.check_abs, label)


@dataclass(frozen=True)
class CncReport:
    fixed_dim: int
    top_eigenvalues: tuple
    max_power: int
    cnc: bool
    label: str


def cnc_check(ctx: ModelContext, X: OperatorTuple,
              tol: Tolerances = DEFAULT_TOL, max_power: int = 64) -> CncReport:
    """Completely non-coisometric diagnostic.

    Iterates Y_m = Phi^m(I); a unit vector kept at norm 1 by every power
    would show up as an eigenvalue of Y_m pinned at 1.  The fixed subspace
    dimension counts eigenvalues of Y at the doubled power still within
    check_abs of 1.
    """
    FX = [np.asarray(M) for M in evaluate_series(ctx.f, X.T)]
    Y = np.eye(X.dim, dtype=complex)
    for _ in range(2 * max_power):
        Y = cp_map(FX, Y)
        if spectral_norm(Y) <= 1e-16:
            break
    w = np.linalg.eigvalsh((Y + dagger(Y)) / 2)
    fixed = int(np.sum(w >= 1.0 - tol.check_abs))
    nilp = joint_nilpotency_order(FX, ctx.degree + 1, eps=1e-300) is not None
    return CncReport(fixed, tuple(np.sort(w)[::-1][:3].tolist()),
                     2 * max_power, fixed == 0,
                     "certificate" if nilp else "diagnostic")


# ---------------------------------------------------------------------------
# defects
# ---------------------------------------------------------------------------

@dataclass
class DefectData:
    delta: np.ndarray        # (I - sum f_i(X) f_i(X)^H)^(1/2), dim x dim
    delta_star: np.ndarray   # (I - f(X)^H f(X))^(1/2) on C^(n dim)
    frame_D: Subspace        # range of delta
    frame_Dstar: Subspace    # range of delta_star
    fX: tuple                # cached f_i(X)

    @property
    def degenerate(self) -> bool:
        return self.frame_D.dim == 0 or self.frame_Dstar.dim == 0


def defects(ctx: ModelContext, X: OperatorTuple,
            tol: Tolerances = DEFAULT_TOL) -> DefectData:
    """Both defect operators of X and orthonormal frames for their ranges.

    delta acts on the base space; delta_star on the n-fold column stack,
    I - [f_i(X)^H f_j(X)]_{ij} blockwise.
    """
    FX = [np.asarray(M) for M in evaluate_series(ctx.f, X.T)]
    dim, n = X.dim, ctx.n
    row_gram = sum(M @ dagger(M) for M in FX)
    delta = hermitian_psd_sqrt(np.eye(dim) - row_gram, tol)
    col = np.vstack(FX)  # column operator C^dim -> C^(n dim)? no: row op adjoint
    # f(X) as a row operator (C^dim)^n -> C^dim is the hstack; its adjoint
    # stacks; I - f(X)^H f(X) is the n dim x n dim block matrix below
    rowop = np.hstack(FX)
    delta_star = hermitian_psd_sqrt(np.eye(n * dim) - dagger(rowop) @ rowop, tol)
    # rank the frames on the defect squares: the square root maps a
    # roundoff eigenvalue 1e-16 to a singular value 1e-8, which a relative
    # cut on delta itself would count as a genuine defect direction
    return DefectData(delta, delta_star,
                      orth_range(delta @ delta, tol),
                      orth_range(delta_star @ delta_star, tol),
                      tuple(FX))


# ---------------------------------------------------------------------------
# Poisson kernel
# ---------------------------------------------------------------------------

@dataclass
class PoissonKernelData:
    K: np.ndarray              # (#basis words * defect dim) x dim
    basis_dim: int             # Fock dim (free) or variety frame dim
    defect_dim: int
    isometry_defect: float     # || K^H K - I || (pure tail included in report)
    pure_tail: float           # r_{top} from the purity iteration
    intertwining: tuple        # residuals || K X_i^H - (M_i^H (x) I) K || on interior
    margin: int


def poisson_kernel(ctx: ModelContext, X: OperatorTuple,
                   tol: Tolerances = DEFAULT_TOL, variety=None) -> PoissonKernelData:
    """The kernel h -> sum_alpha e_alpha (x) Delta f(X)_alpha^H h.

    Isometric up to the purity tail; intertwines X_i^H with the adjoint
    model coordinate (compressed to the variety when one is given).  The
    block at basis word alpha, in the coordinates of the defect frame, is
    frame_D^H Delta (f(X)_alpha)^H.
    """
    data = defects(ctx, X, tol)
    FX = list(data.fX)
    dfrm = data.frame_D
    dD = dfrm.dim
    dim = X.dim
    # word products of f(X) along graded-lex prefixes
    prods = {(): np.eye(dim, dtype=complex)}
    for w in ctx.fock.words:
        if w and w not in prods:
            prods[w] = prods[w[:-1]] @ FX[w[-1] - 1]
    DA = dagger(dfrm.frame) @ data.delta
    blocks = [DA @ dagger(prods[w]) for w in ctx.fock.words]
    K = np.vstack(blocks) if dD else np.zeros((0, dim), dtype=complex)

    # purity tail at the truncation horizon
    Y = np.eye(dim, dtype=complex)
    for _ in range(ctx.degree + 1):
        Y = cp_map(FX, Y)
    tail = spectral_norm(Y)

    margin = ctx.model_margin()
    if variety is None:
        model_ops = ctx.MZ
        iso_defect = spectral_norm(dagger(K) @ K - np.eye(dim)) if dD else \
            spectral_norm(np.eye(dim))
        inter = []
        P = ctx.interior(margin)
        for i in range(ctx.n):
            lhs = K @ dagger(X[i])
            rhs = np.kron(dagger(model_ops[i]), np.eye(dD)) @ K if dD else lhs * 0
            diff = lhs - rhs
            inter.append(spectral_norm(P.left_mask_kron(diff, dD) if dD else diff))
        return PoissonKernelData(K, ctx.fock.dim, dD, iso_defect, tail,
                                 tuple(inter), margin)
    # constrained: compress the Fock leg by the variety frame
    N = variety.N_frame
    KJ = (np.kron(dagger(N.frame), np.eye(dD)) @ K) if dD else \
        np.zeros((0, dim), dtype=complex)
    iso_defect = spectral_norm(dagger(KJ) @ KJ - np.eye(dim)) if dD else \
        spectral_norm(np.eye(dim))
    inter = []
    for i in range(ctx.n):
        lhs = KJ @ dagger(X[i])
        rhs = np.kron(dagger(variety.B[i]), np.eye(dD)) @ KJ if dD else lhs * 0
        inter.append(spectral_norm(lhs - rhs))
    return PoissonKernelData(KJ, N.dim, dD, iso_defect, tail, tuple(inter),
                             margin)


# ---------------------------------------------------------------------------
# rank-one identity on the model
# ---------------------------------------------------------------------------

def random_poly(n: int, degree: int, max_deg: int, rng) -> NcSeries:
    """Random sparse polynomial in n noncommuting variables, degree <= max_deg.

    A couple of words per degree slice, Gaussian coefficients.
    """
    from .freeseries import words_of_length
    coeffs = {}
    for k in range(max_deg + 1):
        pool = words_of_length(n, k)
        take = min(len(pool), 2)
        for idx in rng.choice(len(pool), size=take, replace=False):
            coeffs[pool[int(idx)]] = complex(rng.standard_normal(),
                                             rng.standard_normal())
    return NcSeries(n, degree, coeffs)


def rank_one_identity_check(ctx: ModelContext, q: NcSeries, r: NcSeries,
                            xi: np.ndarray) -> float:
    """Residual of  r(S) P_vac q(S)^H xi  =  <xi, q(S) 1> r(S) 1.

    q, r are polynomials evaluated at the multiplication-by-f_i matrices
    (the left creations); P_vac = I - sum_i S_i S_i^H is the vacuum
    projection.
    """
    S = ctx.MF
    Q = _evaluate_one(q, S, {})
    R = _evaluate_one(r, S, {})
    Pvac = np.eye(ctx.dim, dtype=complex) - sum(Si @ dagger(Si) for Si in S)
    one = ctx.fock.basis_vector(())
    lhs = R @ Pvac @ dagger(Q) @ xi
    rhs = np.vdot(Q @ one, xi) * (R @ one)
    return float(np.linalg.norm(lhs - rhs))
