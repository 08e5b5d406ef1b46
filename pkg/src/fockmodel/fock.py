"""Truncated full Fock space over n letters up to word length d.

The basis {e_alpha} is indexed by free-monoid words in graded-lex order,
dim = sum_{k<=d} n^k.  Left creation prepends a letter, right creation
appends one; both are nilpotent at truncation (the top graded slice maps
to 0), so identities involving them are asserted after compression to an
interior projector whose margin the caller declares.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .freeseries import all_words, count_words_upto
from .linalg import Subspace


class LetterOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class FockContext:
    n: int
    degree: int
    dim: int
    words: tuple        # graded-lex enumeration of words, len == dim
    index: dict         # word -> basis position

    def basis_vector(self, word) -> np.ndarray:
        e = np.zeros(self.dim, dtype=complex)
        e[self.index[tuple(word)]] = 1.0
        return e

    def word_lengths(self) -> np.ndarray:
        return np.array([len(w) for w in self.words])


@lru_cache(maxsize=None)
def fock_context(n: int, degree: int) -> FockContext:
    if n < 1 or degree < 0:
        raise ValueError("need n >= 1 and degree >= 0")
    words = tuple(all_words(n, degree))
    dim = count_words_upto(n, degree)
    assert len(words) == dim
    index = {w: i for i, w in enumerate(words)}
    return FockContext(n, degree, dim, words, index)


def left_creation(ctx: FockContext, i: int) -> np.ndarray:
    """S_i e_alpha = e_{i alpha} for |alpha| < d, 0 on the top slice."""
    if not 1 <= i <= ctx.n:
        raise LetterOutOfRange(f"letter {i} not in 1..{ctx.n}")
    S = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    for col, w in enumerate(ctx.words):
        if len(w) < ctx.degree:
            S[ctx.index[(i,) + w], col] = 1.0
    return S


def right_creation(ctx: FockContext, i: int) -> np.ndarray:
    """R_i e_alpha = e_{alpha i} for |alpha| < d, 0 on the top slice."""
    if not 1 <= i <= ctx.n:
        raise LetterOutOfRange(f"letter {i} not in 1..{ctx.n}")
    R = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    for col, w in enumerate(ctx.words):
        if len(w) < ctx.degree:
            R[ctx.index[w + (i,)], col] = 1.0
    return R


def creation_tuple(ctx: FockContext):
    return tuple(left_creation(ctx, i) for i in range(1, ctx.n + 1))


def right_creation_tuple(ctx: FockContext):
    return tuple(right_creation(ctx, i) for i in range(1, ctx.n + 1))


def vacuum_projection(ctx: FockContext) -> np.ndarray:
    """Rank-one projection onto e_empty."""
    P = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    P[0, 0] = 1.0
    return P


@dataclass(frozen=True)
class GradedProjector:
    """Diagonal 0/1 projector onto span{e_alpha : |alpha| <= cutoff}.

    The compression device for truncation-safe assertions: truncated
    creation operators obey the exact algebraic relations only below the
    top graded slices, so a caller states the margin its identity needs.
    """

    ctx: FockContext
    cutoff: int
    mask: np.ndarray  # boolean, True on retained basis vectors

    @property
    def rank(self) -> int:
        return int(np.sum(self.mask))

    def matrix(self) -> np.ndarray:
        return np.diag(self.mask.astype(complex))

    def compress(self, A) -> np.ndarray:
        """P A P at full ambient size."""
        A = np.asarray(A, dtype=complex)
        out = A.copy()
        out[~self.mask, :] = 0.0
        out[:, ~self.mask] = 0.0
        return out

    def compress_kron(self, A, block: int) -> np.ndarray:
        """(P (x) I_block) A (P (x) I_block) for operators on Fock (x) C^block."""
        big = np.repeat(self.mask, block)
        A = np.asarray(A, dtype=complex)
        out = A.copy()
        out[~big, :] = 0.0
        out[:, ~big] = 0.0
        return out

    def left_mask_kron(self, A, block: int) -> np.ndarray:
        """(P (x) I_block) A -- for maps into Fock (x) C^block."""
        big = np.repeat(self.mask, block)
        A = np.asarray(A, dtype=complex)
        out = A.copy()
        out[~big, :] = 0.0
        return out


def interior(ctx: FockContext, margin: int) -> GradedProjector:
    """Projector onto degrees <= d - margin."""
    if margin < 0 or margin > ctx.degree:
        raise ValueError(f"margin must be in 0..{ctx.degree}")
    cutoff = ctx.degree - margin
    mask = ctx.word_lengths() <= cutoff
    return GradedProjector(ctx, cutoff, mask)


def symmetric_subspace(ctx: FockContext) -> Subspace:
    """Orthonormal frame of the symmetrized vectors, one per letter multiset.

    For each multiset of size k <= d the vector sum_{distinct rearrangements}
    e_beta, normalized; slices have dimension C(n+k-1, k).
    """
    groups = {}
    for pos, w in enumerate(ctx.words):
        groups.setdefault(tuple(sorted(w)), []).append(pos)
    frame = np.zeros((ctx.dim, len(groups)), dtype=complex)
    reps = sorted(groups, key=lambda w: (len(w), w))
    for j, rep in enumerate(reps):
        positions = groups[rep]
        frame[positions, j] = 1.0 / np.sqrt(len(positions))
    return Subspace(ctx.dim, frame)


def word_product(mats, word) -> np.ndarray:
    """X_alpha = X_{i_1} ... X_{i_k} for a word alpha (identity for alpha empty)."""
    dim = mats[0].shape[0]
    out = np.eye(dim, dtype=complex)
    for letter in word:
        out = out @ mats[letter - 1]
    return out
