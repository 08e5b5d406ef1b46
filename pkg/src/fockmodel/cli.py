"""Scenario runner and report emitter.

Loads a config (or builds the default one), executes a named pipeline,
and writes a machine-readable verification report or a human summary
table.  Every pipeline is deterministic given the seed; randomized
sub-steps draw from seed-sequence children so the suite is reproducible
end to end.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import reportio as rio
from .linalg import (DEFAULT_TOL, Subspace, Tolerances, dagger, orth_range,
                     spectral_norm)
from .freeseries import (NcSeries, NcSeriesTuple, compose, invert_composition,
                         property_A_check, tuple_residual)
from . import fock as fk
from .domain import (OperatorTuple, build_model, defects, membership_check,
                     poisson_kernel, pure_check, random_poly,
                     rank_one_identity_check, evaluate_series)
from .charfun import (characteristic_function, fundamental_identity_check,
                      isometry_iff_pure_check, multi_analyticity_check,
                      purely_contractive_check)
from .modeltheory import (reconstruct_and_compare, specht_equivalence,
                          tuple_from_theta)
from .variety import (IdealSpec, build_variety, commutator_ideal,
                      constrained_rank_one_identity_check, random_matrix_poly,
                      trivial_ideal, universal_constraint_check,
                      von_neumann_inequality_check)
from .dilation import (constrained_dilation_pure, dilation_uniqueness_witness,
                       minimal_dilation_pure, wold_split)
from .beurling import LiftingProblem, beurling_factor, commutant_lift
from . import rkhs as rk
from .reportio import CheckRecord, Report, SchemaError

PIPELINES = ("invert", "model", "charfun", "identity47", "reconstruct",
             "dilate", "variety", "beurling", "clt", "kernel", "suite")


# ---------------------------------------------------------------------------
# example generators
# ---------------------------------------------------------------------------

def _triangular_series(n: int, degree: int, c) -> list:
    comp = [[[[1], [1.0, 0.0]]]]
    for i in range(2, n + 1):
        terms = [[[i], [1.0, 0.0]]]
        terms.append([[i - 1, i - 1], rio.encode_complex(c)])
        comp.append(terms)
    return comp


def generate_examples(kind: str, seed: int, params: dict = None) -> dict:
    """Reproducible scenario-config fragments for the standard test stock."""
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    n = int(params.get("n", 2))
    degree = int(params.get("degree", 5))
    if kind == "identity_series":
        idt = NcSeriesTuple.identity(n, degree)
        return {"f": rio.encode_series_tuple(idt), "n": n, "degree": degree,
                "note": "identity tuple f = (Z_1, ..., Z_n)", "seed": seed}
    if kind == "triangular_automorphism":
        c = complex(rng.standard_normal(), rng.standard_normal())
        return {"f": _triangular_series(n, degree, c), "n": n,
                "degree": degree, "seed": seed,
                "note": "triangular automorphism Z_i + c Z_{i-1}^2"}
    if kind == "property_A":
        # lower-triangular substitution: f_i = Z_i + poly(Z_1..Z_{i-1})
        comp = [[[[1], [1.0, 0.0]]]]
        for i in range(2, n + 1):
            terms = [[[i], [1.0, 0.0]]]
            for _ in range(int(params.get("extra_terms", 2))):
                k = int(rng.integers(2, min(degree, 3) + 1))
                w = [int(rng.integers(1, i)) for _ in range(k)]
                c = 0.5 * complex(rng.standard_normal(), rng.standard_normal())
                terms.append([w, rio.encode_complex(c)])
            comp.append(terms)
        return {"f": comp, "n": n, "degree": degree, "seed": seed,
                "note": "random polynomial automorphism with unit Jacobian"}
    if kind == "nilpotent":
        dim = int(params.get("dim", 4))
        mats = []
        for _ in range(n):
            A = rng.standard_normal((dim, dim)) \
                + 1j * rng.standard_normal((dim, dim))
            mats.append(np.triu(A, k=1))
        row = np.hstack(mats)
        s = float(params.get("row_norm", 0.8)) / max(spectral_norm(row), 1e-12)
        return {"tuple": [rio.encode_matrix(s * A) for A in mats],
                "n": n, "dim": dim, "seed": seed,
                "note": "strictly upper-triangular jointly nilpotent tuple"}
    if kind == "contraction":
        dim = int(params.get("dim", 3))
        mats = [rng.standard_normal((dim, dim))
                + 1j * rng.standard_normal((dim, dim)) for _ in range(n)]
        row = np.hstack(mats)
        s = float(params.get("row_norm", 0.7)) / max(spectral_norm(row), 1e-12)
        return {"tuple": [rio.encode_matrix(s * A) for A in mats],
                "n": n, "dim": dim, "seed": seed,
                "note": "random dense tuple scaled to a strict row contraction"}
    if kind == "commuting_pair":
        dim = int(params.get("dim", 3))
        Q = np.linalg.qr(rng.standard_normal((dim, dim))
                         + 1j * rng.standard_normal((dim, dim)))[0]
        mats = []
        for _ in range(n):
            D = np.diag(rng.uniform(-1, 1, dim)
                        + 1j * rng.uniform(-1, 1, dim))
            mats.append(Q @ D @ dagger(Q))
        row = np.hstack(mats)
        s = float(params.get("row_norm", 0.7)) / max(spectral_norm(row), 1e-12)
        return {"tuple": [rio.encode_matrix(s * A) for A in mats],
                "n": n, "dim": dim, "seed": seed,
                "note": "simultaneously diagonalizable commuting tuple"}
    if kind == "commuting_nilpotent":
        dim = int(params.get("dim", 4))
        J = np.diag(np.ones(dim - 1), 1).astype(complex)
        mats = []
        for _ in range(n):
            c = rng.standard_normal(dim - 1) + 1j * rng.standard_normal(dim - 1)
            mats.append(sum(ck * np.linalg.matrix_power(J, k + 1)
                            for k, ck in enumerate(c)))
        row = np.hstack(mats)
        s = float(params.get("row_norm", 0.7)) / max(spectral_norm(row), 1e-12)
        return {"tuple": [rio.encode_matrix(s * A) for A in mats],
                "n": n, "dim": dim, "seed": seed,
                "note": "commuting jointly nilpotent polynomials of one "
                        "Jordan cell"}
    raise SchemaError(f"unknown example kind {kind!r}")


def example_tuple(kind: str, seed: int, params: dict = None) -> OperatorTuple:
    frag = generate_examples(kind, seed, params)
    return OperatorTuple(tuple(rio.decode_matrix(m) for m in frag["tuple"]))


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

DEFAULT_CONFIG = {
    "n": 2,
    "degree": 5,
    "seed": 7,
    "pipeline": "suite",
    "tol": {"rank_rel": 1e-9, "check_abs": 1e-8, "opt_tol": 1e-6},
    "f": _triangular_series(2, 5, 1.0),
    "ideal": "commutator",
    "params": {},
}


def load_config(path=None) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))   # deep copy
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as e:
            raise rio.IoError(f"cannot read config {path}: {e}") from None
        except json.JSONDecodeError as e:
            raise SchemaError(f"config is not valid JSON: {e}") from None
        if not isinstance(user, dict):
            raise SchemaError("config root must be an object")
        cfg.update(user)
        if "f" not in user and (cfg.get("n") != 2 or cfg.get("degree") != 5):
            cfg["f"] = None if cfg.get("n") == 1 \
                else _triangular_series(cfg["n"], cfg["degree"], 1.0)
    return cfg


def validate_config(cfg: dict) -> None:
    for key in ("n", "degree", "seed"):
        if not isinstance(cfg.get(key), int):
            raise SchemaError(f"config field {key!r} must be an integer")
    if cfg["n"] < 1 or cfg["n"] > 6:
        raise SchemaError(f"n = {cfg['n']} out of the supported range 1..6")
    if cfg["degree"] < 1 or cfg["degree"] > 10:
        raise SchemaError(f"degree = {cfg['degree']} out of range 1..10")
    if cfg.get("pipeline") not in PIPELINES:
        raise SchemaError(f"pipeline must be one of {PIPELINES}, "
                          f"got {cfg.get('pipeline')!r}")
    tol = cfg.get("tol", {})
    if not isinstance(tol, dict):
        raise SchemaError("tol must be an object of named tolerances")
    for k, v in tol.items():
        if k not in ("rank_rel", "check_abs", "opt_tol"):
            raise SchemaError(f"unknown tolerance {k!r}")
        if not isinstance(v, (int, float)) or v <= 0:
            raise SchemaError(f"tolerance {k} must be positive")
    if cfg.get("ideal") not in ("commutator", "none"):
        raise SchemaError("ideal must be 'commutator' or 'none'")
    if "f" in cfg and cfg["f"] is not None:
        try:
            terms = [(w, c) for comp in cfg["f"] for w, c in comp]
        except (TypeError, ValueError):
            raise SchemaError("f must be a list of per-component term lists "
                              "[[word, [re, im]], ...]") from None
        maxlen = max((len(w) for w, _ in terms), default=0)
        if cfg["degree"] < maxlen:
            raise SchemaError(f"degree {cfg['degree']} below the largest "
                              f"generator word length {maxlen}")
        for w, _ in terms:
            if any(not isinstance(l, int) or l < 1 or l > cfg["n"]
                   for l in w):
                raise SchemaError(f"word {w} has letters outside 1..{cfg['n']}")


def _tolerances(cfg) -> Tolerances:
    t = dict(cfg.get("tol", {}))
    return Tolerances(t.get("rank_rel", 1e-9), t.get("check_abs", 1e-8),
                      t.get("opt_tol", 1e-6))


def _series_from_cfg(cfg) -> NcSeriesTuple:
    if cfg.get("f") is None:
        return NcSeriesTuple.identity(cfg["n"], cfg["degree"])
    return rio.decode_series_tuple(cfg["f"], cfg["n"], cfg["degree"])


def _context(cfg, tol):
    f = _series_from_cfg(cfg)
    g = None
    if cfg.get("g") is not None:
        g = rio.decode_series_tuple(cfg["g"], cfg["n"], cfg["degree"])
    return build_model(f, tol, g=g)


def _tuple_from_cfg(cfg, key="tuple"):
    val = cfg.get(key)
    if val is None:
        return None
    if isinstance(val, dict) and "file" in val:
        try:
            with open(val["file"]) as fh:
                val = json.load(fh)
        except OSError as e:
            raise rio.IoError(f"cannot read tuple file: {e}") from None
    return OperatorTuple(tuple(rio.decode_matrix(m) for m in val))


def _ideal_from_cfg(cfg) -> IdealSpec:
    return commutator_ideal() if cfg.get("ideal") == "commutator" \
        else trivial_ideal()


def _rec(name, value, tolerance, margin=None, passed=None) -> CheckRecord:
    value = float(value)
    if passed is None:
        passed = value <= tolerance
    return CheckRecord(name, value, float(tolerance), margin, bool(passed))


def _bool_rec(name, ok, margin=None) -> CheckRecord:
    return CheckRecord(name, 1.0 if ok else 0.0, 0.5, margin, bool(ok))


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def _p_invert(cfg, tol, rng):
    f = _series_from_cfg(cfg)
    g = invert_composition(f, tol)
    idt = NcSeriesTuple.identity(f.n, f.degree)
    checks = [
        _rec("invert/forward_roundtrip", tuple_residual(compose(f, g), idt),
             1e-12),
        _rec("invert/backward_roundtrip", tuple_residual(compose(g, f), idt),
             1e-12),
        _bool_rec("invert/property_A", property_A_check(f, tol)),
    ]
    return checks, {"g": rio.encode_series_tuple(g)}


def _p_model(cfg, tol, rng):
    ctx = _context(cfg, tol)
    S = fk.creation_tuple(ctx.fock)
    res_f = max(spectral_norm(ctx.MF[i] - S[i]) for i in range(ctx.n))
    margin = ctx.model_margin()
    Q = ctx.interior(margin).matrix()
    G = ctx.coordinate_gram()
    I = np.eye(ctx.dim)
    diag = max(spectral_norm(Q @ (dagger(M) @ M - G[i, i] * I) @ Q)
               for i, M in enumerate(ctx.MZ))
    off = 0.0
    for i in range(ctx.n):
        for j in range(ctx.n):
            if i != j:
                off = max(off, spectral_norm(
                    Q @ (dagger(ctx.MZ[i]) @ ctx.MZ[j] - G[i, j] * I) @ Q))
    checks = [
        _rec("model/f_of_MZ_equals_S", res_f, tol.check_abs),
        _rec("model/gram_diagonal_interior", diag, tol.check_abs, margin),
    ]
    if ctx.n > 1:
        checks.append(_rec("model/gram_offdiagonal_interior", off,
                           tol.check_abs, margin))
    return checks, {"coordinate_gram": rio.encode_matrix(G)}


def _p_charfun(cfg, tol, rng):
    ctx = _context(cfg, tol)
    X = _tuple_from_cfg(cfg)
    if X is None:
        X = example_tuple("contraction", int(rng.integers(2 ** 31)),
                          {"n": ctx.n, "row_norm": 0.5,
                           "dim": cfg.get("params", {}).get("dim", 3)})
    mem = membership_check(ctx, X, tol)
    pr = pure_check(ctx, X, tol)
    K = poisson_kernel(ctx, X, tol)
    th = characteristic_function(ctx, X, tol=tol)
    fid = fundamental_identity_check(K, th, tol)
    iso = isometry_iff_pure_check(th, pr, tol, tail=10.0 * K.pure_tail)
    ma = multi_analyticity_check(th, tol)
    pc = purely_contractive_check(th, tol)
    checks = [
        _bool_rec("charfun/membership", mem.ok),
        _bool_rec("charfun/pure", pr.pure),
        _rec("charfun/poisson_isometry", K.isometry_defect,
             tol.check_abs + K.pure_tail, K.margin),
        _rec("charfun/fundamental_identity", fid.residual_interior,
             tol.check_abs + fid.pure_tail, fid.margin),
        _bool_rec("charfun/isometry_iff_pure", iso.consistent),
        _rec("charfun/multi_analytic", max(ma, default=0.0), tol.check_abs,
             th.margin),
        _bool_rec("charfun/purely_contractive", pc.purely_contractive),
    ]
    return checks, {}


def _p_identity47(cfg, tol, rng):
    ctx = _context(cfg, tol)
    X = _tuple_from_cfg(cfg)
    if X is None:
        dim = cfg.get("params", {}).get("dim", 1)
        X = OperatorTuple(tuple(np.zeros((dim, dim), dtype=complex)
                                for _ in range(ctx.n)))
    K = poisson_kernel(ctx, X, tol)
    th = characteristic_function(ctx, X, tol=tol)
    fid = fundamental_identity_check(K, th, tol)
    checks = [
        _rec("identity47/interior_residual", fid.residual_interior,
             tol.check_abs + fid.pure_tail, fid.margin),
        _bool_rec("identity47/nondegenerate", not fid.degenerate),
    ]
    return checks, {}


def _p_reconstruct(cfg, tol, rng):
    ctx = _context(cfg, tol)
    count = int(cfg.get("params", {}).get("count", 3))
    checks = []
    for k in range(count):
        kind = "nilpotent" if k % 2 == 0 else "contraction"
        X = example_tuple(kind, int(rng.integers(2 ** 31)),
                          {"n": ctx.n, "dim": 3, "row_norm": 0.5})
        # trace agreement is tail-limited for tuples whose power decay
        # has not flattened by the working degree
        tail = poisson_kernel(ctx, X, tol).pure_tail
        cmp = max(1e-7, 10.0 * tail)
        rep = reconstruct_and_compare(ctx, X, tol, cmp_tol=cmp)
        dev = rep.specht.max_deviation if rep.specht is not None else 1.0
        checks.append(_rec(f"reconstruct/specht_{k}", dev, cmp,
                           margin=tail, passed=rep.passed))
    # multiplication by the square of the coordinate on the line realizes
    # the 2x2 nilpotent Jordan cell
    ctx1 = build_model(NcSeriesTuple.identity(1, max(4, cfg["degree"])), tol)
    S1 = fk.creation_tuple(ctx1.fock)[0]
    real = tuple_from_theta(ctx1, S1 @ S1, tol)
    J2 = OperatorTuple((np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),))
    sp = specht_equivalence(real.T, J2, tol=tol)
    checks.append(_rec("reconstruct/jordan2_from_theta", sp.max_deviation,
                       1e-7, passed=sp.equivalent))
    return checks, {}


def _p_dilate(cfg, tol, rng):
    ctx = _context(cfg, tol)
    X = _tuple_from_cfg(cfg)
    if X is None:
        X = example_tuple("nilpotent", int(rng.integers(2 ** 31)),
                          {"n": ctx.n, "dim": 4, "row_norm": 0.5})
    D1 = minimal_dilation_pure(ctx, X, tol)
    iso = spectral_norm(dagger(D1.embed) @ D1.embed
                        - np.eye(D1.embedded_dim))
    inter = max(spectral_norm(dagger(V) @ D1.embed
                              - D1.embed @ dagger(T))
                for V, T in zip(D1.V, X.T))
    wr = wold_split(OperatorTuple(D1.V), ctx.f, tol)
    self_wit = dilation_uniqueness_witness(D1, D1, tol)
    checks = [
        _rec("dilate/embed_isometry", iso, tol.check_abs),
        _rec("dilate/adjoint_intertwining", inter, 1e-9),
        _bool_rec("dilate/minimality_rank",
                  D1.minimality_rank is not None,
                  margin=float(ctx.model_margin())),
        _rec("dilate/wold_residual_defect", wr.residual_relation_defect,
             tol.check_abs),
        _rec("dilate/uniqueness_self_witness",
             max(self_wit.unitary_residual, self_wit.intertwine_residual,
                 self_wit.embed_residual), tol.check_abs,
             passed=self_wit.passed),
    ]
    if cfg.get("ideal") == "commutator" and ctx.n > 1:
        vctx = build_variety(ctx, commutator_ideal(), tol)
        Xc = example_tuple("commuting_nilpotent", int(rng.integers(2 ** 31)),
                           {"n": ctx.n, "dim": 4, "row_norm": 0.5})
        Dc = constrained_dilation_pure(vctx, Xc, tol)
        isoc = spectral_norm(dagger(Dc.embed) @ Dc.embed
                             - np.eye(Dc.embedded_dim))
        checks.append(_rec("dilate/constrained_embed_isometry", isoc,
                           tol.check_abs))
        checks.append(_bool_rec("dilate/constrained_kind",
                                Dc.kind == "constrained_pure"))
    return checks, {}


def _p_variety(cfg, tol, rng):
    ctx = _context(cfg, tol)
    vctx = build_variety(ctx, _ideal_from_cfg(cfg), tol)
    ucc = universal_constraint_check(vctx, tol)
    worst_free = 0.0
    worst_con = 0.0
    trials = int(cfg.get("params", {}).get("count", 10))
    for _ in range(trials):
        q = random_poly(ctx.n, ctx.degree, 3, rng)
        r = random_poly(ctx.n, ctx.degree, 3, rng)
        xi = rng.standard_normal(ctx.dim) + 1j * rng.standard_normal(ctx.dim)
        worst_free = max(worst_free, rank_one_identity_check(ctx, q, r, xi))
        xin = rng.standard_normal(vctx.N_frame.dim) \
            + 1j * rng.standard_normal(vctx.N_frame.dim)
        worst_con = max(worst_con, constrained_rank_one_identity_check(
            vctx, q, r, xin))
    checks = [
        _rec("variety/universal_constraints_interior",
             max(ucc.residuals_interior, default=0.0), tol.check_abs,
             ucc.margin),
        _rec("variety/rank_one_identity_free", worst_free, 1e-10),
        _rec("variety/rank_one_identity_constrained", worst_con, 1e-10),
    ]
    if vctx.contains_vacuum:
        # compressed vacuum projection is exactly rank one
        from .domain import _evaluate_one
        B = list(vctx.B)
        fB = [_evaluate_one(fi, B, {}) for fi in ctx.f]
        Pc = np.eye(vctx.N_frame.dim, dtype=complex) \
            - sum(F @ dagger(F) for F in fB)
        vac = dagger(vctx.N_frame.frame) @ ctx.fock.basis_vector(())
        checks.append(_rec("variety/vacuum_projection",
                           spectral_norm(Pc - np.outer(vac, np.conj(vac))),
                           tol.check_abs))
    if ctx.n > 1 and cfg.get("ideal") == "commutator":
        Xc = example_tuple("commuting_pair", int(rng.integers(2 ** 31)),
                           {"n": ctx.n, "dim": 3, "row_norm": 0.5})
        polys = [random_matrix_poly(ctx.n, 1, 2, rng) for _ in range(4)]
        vn = von_neumann_inequality_check(vctx, Xc, polys, level=1, tol=tol)
        checks.append(_rec("variety/von_neumann_level1",
                           max(0.0, vn.lhs - vn.rhs), tol.check_abs,
                           margin=float(ctx.model_margin()),
                           passed=vn.passed))
    return checks, {}


def _closure_under(mats, seed_cols, max_dim):
    frame = orth_range(seed_cols).frame
    while frame.shape[1] < max_dim:
        new = np.hstack([frame] + [A @ frame for A in mats])
        grown = orth_range(new).frame
        if grown.shape[1] == frame.shape[1]:
            break
        frame = grown
    return frame


def _p_beurling(cfg, tol, rng):
    ctx = _context(cfg, tol)
    vctx = build_variety(ctx, trivial_ideal(), tol)
    dim = vctx.N_frame.dim
    # invariant subspace: algebra closure of vectors supported on a single
    # word length >= 2, so the subspace is proper and the wandering
    # vectors stay graded -- a mixed-degree wandering vector would lose
    # its top-degree mass under the truncated creations and the word map
    # could no longer reproduce the subspace exactly
    lens = np.array([len(w) for w in ctx.fock.words])
    mask = lens == min(2, ctx.degree)
    seeds = np.stack([np.where(mask, rng.standard_normal(dim)
                               + 1j * rng.standard_normal(dim), 0.0)
                      for _ in range(2)], axis=1)
    frame = _closure_under(list(vctx.B), seeds, dim)
    bf = beurling_factor(vctx, Subspace(dim, frame), tol)
    theta = bf.theta
    S = fk.creation_tuple(ctx.fock)
    inter = max((spectral_norm(Si @ theta
                               - theta @ np.kron(Si, np.eye(bf.G_dim)))
                 for Si in S), default=0.0) if bf.G_dim else 0.0
    checks = [
        _rec("beurling/projection_residual", bf.residual, 1e-7),
        _rec("beurling/partial_isometry_defect", bf.partial_isometry_defect,
             1e-7),
        _rec("beurling/intertwining", inter, 1e-7),
    ]
    return checks, {}


def _p_clt(cfg, tol, rng):
    ctx = _context(cfg, tol)
    vctx = build_variety(ctx, trivial_ideal(), tol)
    dim = vctx.N_frame.dim
    # feasible by construction: a word polynomial in the right
    # multiplications is in the commutant, so its compression to a
    # co-invariant degree slice is liftable at equal norm
    words = [(), (1,)] + ([(2,)] if ctx.n > 1 else [(1, 1)])
    G = sum(complex(rng.standard_normal(), rng.standard_normal())
            * fk.word_product(list(vctx.W), w) for w in words)
    lens = np.array([len(w) for w in ctx.fock.words])
    sel = np.flatnonzero(lens <= max(0, ctx.degree - 2))
    E2 = Subspace(dim, np.eye(dim, dtype=complex)[:, sel])
    E1 = Subspace(dim, np.eye(dim, dtype=complex))
    X = dagger(E2.frame) @ G @ E1.frame
    prob = LiftingProblem(vctx, 1, 1, E1, E2, X)
    res = commutant_lift(prob, tol)
    checks = [
        _rec("clt/norm_ratio", max(0.0, res.norm_G / max(res.norm_X, 1e-12)
                                   - 1.0), 1e-4),
        _rec("clt/intertwine_residual", res.intertwine_residual,
             tol.opt_tol * 10),
        _rec("clt/compression_residual", res.compression_residual,
             tol.opt_tol * 10),
        _bool_rec("clt/converged", res.converged),
    ]
    # scalar corner completion: lifting from the vacuum slice of a
    # two-dimensional coefficient space has a closed-form optimum
    B = np.array([[0.3 + 0.1j, -0.2], [0.05j, 0.4]])
    ctx1 = build_model(NcSeriesTuple.identity(1, 1), tol)
    v1 = build_variety(ctx1, trivial_ideal(), tol)
    amb = 2 * v1.N_frame.dim
    E1p = Subspace(amb, np.vstack([np.eye(2), np.zeros((2, 2))]).astype(complex))
    E2p = Subspace(amb, np.eye(amb, dtype=complex))
    Xp = np.vstack([np.zeros((2, 2)), B]).astype(complex)
    probp = LiftingProblem(v1, 2, 2, E1p, E2p, Xp)
    resp = commutant_lift(probp, tol)
    checks.append(_rec("clt/parrott_optimum",
                       abs(resp.norm_G - spectral_norm(Xp)), 1e-8))
    return checks, {}


def _p_kernel(cfg, tol, rng):
    ctx = _context(cfg, tol)
    count = int(cfg.get("params", {}).get("points", 15))
    P = rk.sample_points(ctx, count, rng=rng, tol=tol)
    gr = rk.gram_psd_check(ctx, P, tol)
    checks = [
        _rec("kernel/gram_min_eig", max(0.0, -gr.min_eig), 1e-10),
    ]
    ctx1 = build_model(NcSeriesTuple.identity(1, 8), tol)
    szego = abs(rk.kernel_eval(ctx1, [0.5], [0.5], tol) - 4.0 / 3.0)
    checks.append(_rec("kernel/szego_value", szego, 1e-12))
    P1 = rk.point_set(ctx1, [[0.0], [0.3], [-0.25 + 0.2j], [0.1j]], tol)
    for label, T in (("zero", np.zeros((1, 1), dtype=complex)),
                     ("jordan2", np.array([[0, 1], [0, 0]], dtype=complex))):
        pick = rk.pick_contractivity_check(ctx1, OperatorTuple((T,)), P1, tol)
        checks.append(_rec(f"kernel/pick_{label}", max(0.0, -pick.min_eig),
                           pick.threshold, passed=pick.passed))
    if ctx.n > 1:
        vctx = build_variety(ctx, commutator_ideal(), tol)
        sm = rk.symmetric_model_consistency(vctx, P, tol)
        checks.append(_rec("kernel/symmetric_model_eigenvector",
                           max(sm.residuals, default=0.0), tol.check_abs,
                           ctx.model_margin(), passed=sm.passed))
    return checks, {}


_PIPELINE_FUNCS = {
    "invert": _p_invert,
    "model": _p_model,
    "charfun": _p_charfun,
    "identity47": _p_identity47,
    "reconstruct": _p_reconstruct,
    "dilate": _p_dilate,
    "variety": _p_variety,
    "beurling": _p_beurling,
    "clt": _p_clt,
    "kernel": _p_kernel,
}


# ---------------------------------------------------------------------------
# scenario runner
# ---------------------------------------------------------------------------

def _run_one(name, cfg, tol, child_seed, checks, artifacts, timings):
    rng = np.random.default_rng(child_seed)
    t0 = time.perf_counter()
    try:
        cs, arts = _PIPELINE_FUNCS[name](cfg, tol, rng)
        checks.extend(cs)
        for k, v in arts.items():
            artifacts[f"{name}/{k}"] = v
    except Exception as e:                      # embedded, not raised
        checks.append(CheckRecord(f"{name}/pipeline_error", 1.0, 0.0,
                                  None, False))
        artifacts[f"{name}/error"] = f"{type(e).__name__}: {e}"
    timings[name] = time.perf_counter() - t0


def run_scenario(config: dict) -> Report:
    cfg = dict(config)
    validate_config(cfg)
    tol = _tolerances(cfg)
    pipeline = cfg["pipeline"]
    checks, artifacts, timings = [], {}, {}
    ss = np.random.SeedSequence(cfg["seed"])
    if pipeline == "suite":
        names = [p for p in PIPELINES if p != "suite"]
        for name, child in zip(names, ss.spawn(len(names))):
            _run_one(name, cfg, tol, child, checks, artifacts, timings)
    else:
        _run_one(pipeline, cfg, tol, ss, checks, artifacts, timings)
    meta = {
        "config": cfg,
        "config_hash": rio.config_hash(cfg),
        "seed": cfg["seed"],
        "pipeline": pipeline,
        "timings": timings,
    }
    return Report(meta, tuple(checks), artifacts)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fockmodel",
        description="Run verification pipelines for the truncated-Fock "
                    "operator model laboratory.")
    p.add_argument("--config", help="path to a JSON scenario config")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--degree", type=int, help="override truncation degree")
    p.add_argument("--tol", type=float, help="override check_abs")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--pipeline", choices=PIPELINES,
                   help="override the pipeline name")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.degree is not None:
            cfg["degree"] = args.degree
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.pipeline is not None:
            cfg["pipeline"] = args.pipeline
        if args.tol is not None:
            cfg.setdefault("tol", {})
            cfg["tol"] = dict(cfg["tol"], check_abs=args.tol)
        report = run_scenario(cfg)
    except (SchemaError, rio.IoError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    text = rio.format_report(report, args.format)
    if args.out:
        rio.emit_report(report, args.out, args.format)
    else:
        sys.stdout.write(text)
    return 0 if report.overall_pass else 1


if __name__ == "__main__":
    sys.exit(main())
