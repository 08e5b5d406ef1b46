"""Scalar-domain reproducing kernel machinery.

The commutative trace of the model: scalar points certified to lie in
the coordinate domain, the reproducing kernel built from the defining
tuple, positive-semidefiniteness of kernel Gram matrices, Pick-type
contractivity of the pointwise characteristic function, and the joint
eigenvector property tying kernel vectors to the compressed symmetric
model.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import Tolerances, DEFAULT_TOL, dagger
from .domain import ModelContext, OperatorTuple, defects, membership_check
from .variety import VarietyContext
from .charfun import (PointOutsideDomain, NonCommutingTuple,
                      commutative_char_at_point, commutativity_defect,
                      scalar_tuple_value)


@dataclass(frozen=True)
class PointSet:
    points: tuple          # tuple of complex coordinate vectors (n,)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def n(self) -> int:
        return len(self.points[0]) if self.points else 0


def domain_point_residuals(ctx: ModelContext, z):
    """(sum |f_i(z)|^2, || g(f(z)) - z ||) for the two domain conditions."""
    fz = scalar_tuple_value(ctx.f, z)
    s = float(np.sum(np.abs(fz) ** 2))
    gfz = scalar_tuple_value(ctx.g, fz)
    ret = float(np.linalg.norm(gfz - np.asarray(z, dtype=complex).ravel()))
    return s, ret


def _point_ok(ctx, z, tol):
    s, ret = domain_point_residuals(ctx, z)
    return s < 1.0 and ret <= tol.check_abs * 10 + 1e-6


def point_set(ctx: ModelContext, pts, tol: Tolerances = DEFAULT_TOL
              ) -> PointSet:
    """Certify a list of scalar points for the coordinate domain."""
    cert = []
    for z in pts:
        z = np.asarray(z, dtype=complex).ravel()
        if len(z) != ctx.n:
            raise ValueError(f"point arity {len(z)} != {ctx.n}")
        s, ret = domain_point_residuals(ctx, z)
        if s >= 1.0:
            raise PointOutsideDomain(f"sum |f_i(z)|^2 = {s:.6f} >= 1")
        if ret > tol.check_abs * 10 + 1e-6:
            raise PointOutsideDomain(f"g(f(z)) misses z by {ret:.3e}")
        cert.append(z)
    return PointSet(tuple(cert))


def sample_points(ctx: ModelContext, count: int, rng=None, radius: float = 0.9,
                  tol: Tolerances = DEFAULT_TOL) -> PointSet:
    """Uniform samples of the coordinate domain: w uniform in the complex
    n-ball of the given radius, pushed through z = g(w) and re-certified."""
    if rng is None:
        rng = np.random.default_rng(0)
    n = ctx.n
    pts = []
    attempts = 0
    while len(pts) < count and attempts < 50 * count + 50:
        attempts += 1
        u = rng.standard_normal(2 * n)
        u /= np.linalg.norm(u)
        r = radius * rng.uniform() ** (1.0 / (2 * n))
        w = r * (u[:n] + 1j * u[n:])
        z = scalar_tuple_value(ctx.g, w)
        if _point_ok(ctx, z, tol):
            pts.append(z)
    if len(pts) < count:
        raise PointOutsideDomain(
            f"could only certify {len(pts)} of {count} samples")
    return PointSet(tuple(pts))


# ---------------------------------------------------------------------------
# kernel and Gram matrices
# ---------------------------------------------------------------------------

def kernel_eval(ctx: ModelContext, mu, lam,
                tol: Tolerances = DEFAULT_TOL) -> complex:
    """K(mu, lam) = 1 / (1 - sum_i f_i(mu) conj(f_i(lam)))."""
    for z in (mu, lam):
        if not _point_ok(ctx, z, tol):
            s, ret = domain_point_residuals(ctx, z)
            raise PointOutsideDomain(
                f"point fails the domain test (sum {s:.6f}, return {ret:.3e})")
    fm = scalar_tuple_value(ctx.f, mu)
    fl = scalar_tuple_value(ctx.f, lam)
    return complex(1.0 / (1.0 - np.sum(fm * np.conj(fl))))


@dataclass(frozen=True)
class GramReport:
    kernel: np.ndarray
    min_eig: float
    passed: bool


def gram_psd_check(ctx: ModelContext, P: PointSet,
                   tol: Tolerances = DEFAULT_TOL) -> GramReport:
    """Positive semidefiniteness of [K(z_i, z_j)] over the point set."""
    if len(P) > 256:
        raise ValueError("point set too large for a dense Gram check")
    m = len(P)
    G = np.empty((m, m), dtype=complex)
    for i, zi in enumerate(P):
        for j, zj in enumerate(P):
            G[i, j] = kernel_eval(ctx, zi, zj, tol)
    w = np.linalg.eigvalsh((G + dagger(G)) / 2)
    return GramReport(G, float(w[0]), bool(w[0] >= -tol.check_abs))


@dataclass(frozen=True)
class PickReport:
    kernel: np.ndarray
    pick: np.ndarray
    block_dim: int
    min_eig: float
    threshold: float
    passed: bool


def pick_contractivity_check(ctx: ModelContext, X: OperatorTuple, P: PointSet,
                             tol: Tolerances = DEFAULT_TOL,
                             theta_scale: float = 1.0) -> PickReport:
    """Block Pick matrix [(I - Theta(z_i) Theta(z_j)^H) K(z_i, z_j)].

    A contractive multiplier makes it PSD; theta_scale deliberately
    rescales the pointwise symbol to demonstrate failure sensitivity.
    """
    if commutativity_defect(X) > tol.check_abs:
        raise NonCommutingTuple("Pick test needs a commuting tuple")
    mem = membership_check(ctx, X, tol)
    if not mem.ok:
        raise ValueError(f"tuple outside the domain ({mem.row_norm:.6f})")
    D = defects(ctx, X, tol)
    thetas = [theta_scale * commutative_char_at_point(ctx, X, D, z, tol)
              for z in P]
    m = len(P)
    e = thetas[0].shape[0] if m else 0
    K = np.empty((m, m), dtype=complex)
    blocks = np.empty((m * e, m * e), dtype=complex)
    for i in range(m):
        for j in range(m):
            K[i, j] = kernel_eval(ctx, P.points[i], P.points[j], tol)
            blocks[i * e:(i + 1) * e, j * e:(j + 1) * e] = \
                (np.eye(e) - thetas[i] @ dagger(thetas[j])) * K[i, j]
    w = np.linalg.eigvalsh((blocks + dagger(blocks)) / 2)
    thr = 1e-9 * max(1.0, abs(float(np.trace(blocks).real)))
    return PickReport(K, blocks, e, float(w[0]), thr, bool(w[0] >= -thr))


# ---------------------------------------------------------------------------
# symmetric-model consistency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricModelReport:
    residuals: tuple       # per point, interior-masked eigen-residual
    tails: tuple           # per point, sqrt(s^{d+1} / (1 - s))
    passed: bool


def kernel_vector(ctx: ModelContext, z) -> np.ndarray:
    """Truncated kernel vector sum_alpha conj(f_alpha(z)) e_alpha."""
    fz = scalar_tuple_value(ctx.f, z)
    u = np.empty(ctx.fock.dim, dtype=complex)
    for idx, w in enumerate(ctx.fock.words):
        u[idx] = np.conj(np.prod([fz[c - 1] for c in w])) if w else 1.0
    return u


def symmetric_model_consistency(vctx: VarietyContext, P: PointSet,
                                tol: Tolerances = DEFAULT_TOL
                                ) -> SymmetricModelReport:
    """Joint eigenvector property of compressed kernel vectors.

    For each certified point the compression of the kernel vector to the
    variety frame satisfies B_i^H v = conj(z_i) v on interior degrees;
    the unmasked error is bounded by the geometric tail, which is
    reported alongside.
    """
    ctx = vctx.model
    FN = vctx.N_frame.frame
    lens = np.array([len(w) for w in ctx.fock.words])
    degN = np.array([int(lens[np.abs(FN[:, j]) > 1e-10].max())
                     for j in range(FN.shape[1])])
    cut = ctx.degree - ctx.model_margin()
    mask = degN <= cut
    residuals, tails = [], []
    for z in P:
        u = kernel_vector(ctx, z)
        v = dagger(FN) @ u
        nv = float(np.linalg.norm(v))
        worst = 0.0
        for i in range(vctx.n):
            r = dagger(vctx.B[i]) @ v - np.conj(z[i]) * v
            worst = max(worst, float(np.linalg.norm(r[mask])) / nv)
        s, _ = domain_point_residuals(ctx, z)
        tails.append(float(np.sqrt(s ** (ctx.degree + 1) / (1.0 - s))))
        residuals.append(worst)
    ok = all(r <= tol.check_abs for r in residuals)
    return SymmetricModelReport(tuple(residuals), tuple(tails), ok)
