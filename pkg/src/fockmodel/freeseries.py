"""Free monoid words and truncated noncommutative formal power series.

A word is a tuple of letters from {1, ..., n}; the empty tuple is the unit.
A series holds a sparse map word -> complex coefficient, together with the
variable count n and a hard truncation degree d: every product or
composition drops words longer than d.  The canonical enumeration of words
everywhere in the package is graded lexicographic (length first, then
lexicographic within a length).

Tuples of series carry composition, the Jacobian at 0, compositional
inversion (degree-by-degree fixed point), a polynomial-automorphism check,
and per-degree coefficient-norm diagnostics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOL, Tolerances

Word = tuple  # tuple of ints in {1, ..., n}; () is the empty word

EMPTY_WORD: Word = ()


class MismatchedContext(ValueError):
    """Series with different variable counts or truncation degrees mixed."""


class CompositionRequiresZeroConstant(ValueError):
    """Substituted tuple has a nonzero constant term."""


class NonzeroConstantTerm(ValueError):
    """Inversion requires the tuple to vanish at zero."""


class SingularJacobian(ValueError):
    """Linear part not invertible within tolerance."""


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------

def words_of_length(n: int, k: int):
    """All words of length k over {1,...,n}, lexicographic."""
    return [tuple(w) for w in itertools.product(range(1, n + 1), repeat=k)]


def all_words(n: int, degree: int):
    """All words of length <= degree in graded-lex order."""
    out = []
    for k in range(degree + 1):
        out.extend(words_of_length(n, k))
    return out


def count_words_upto(n: int, degree: int) -> int:
    """Number of words of length <= degree: sum_{k<=d} n^k."""
    return sum(n ** k for k in range(degree + 1))


def word_index(word: Word, n: int) -> int:
    """Position of a word in the graded-lex enumeration of all words."""
    k = len(word)
    offset = count_words_upto(n, k - 1) if k else 0
    pos = 0
    for letter in word:
        pos = pos * n + (letter - 1)
    return offset + pos


def check_word(word: Word, n: int) -> Word:
    w = tuple(int(c) for c in word)
    if any(c < 1 or c > n for c in w):
        raise ValueError(f"letter out of range in word {w} (n={n})")
    return w


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------

@dataclass
class NcSeries:
    """Sparse truncated series sum_{|alpha| <= degree} a_alpha Z_alpha."""

    n: int
    degree: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for w, c in self.coeffs.items():
            w = check_word(w, self.n)
            if len(w) > self.degree:
                raise ValueError(f"word {w} exceeds truncation degree {self.degree}")
            c = complex(c)
            if c != 0:
                cleaned[w] = cleaned.get(w, 0j) + c
        self.coeffs = cleaned

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(n: int, degree: int) -> "NcSeries":
        return NcSeries(n, degree, {})

    @staticmethod
    def monomial(n: int, degree: int, word, coeff=1.0) -> "NcSeries":
        return NcSeries(n, degree, {tuple(word): coeff})

    @staticmethod
    def variable(n: int, degree: int, i: int) -> "NcSeries":
        """The series Z_i."""
        return NcSeries.monomial(n, degree, (i,))

    # -- basic queries -----------------------------------------------------

    def coeff(self, word) -> complex:
        return self.coeffs.get(tuple(word), 0j)

    def constant_term(self) -> complex:
        return self.coeffs.get(EMPTY_WORD, 0j)

    def max_word_length(self) -> int:
        return max((len(w) for w in self.coeffs), default=0)

    def prune(self, eps: float = 0.0) -> "NcSeries":
        kept = {w: c for w, c in self.coeffs.items() if abs(c) > eps}
        return NcSeries(self.n, self.degree, kept)

    # -- arithmetic --------------------------------------------------------

    def _check_context(self, other: "NcSeries"):
        if self.n != other.n or self.degree != other.degree:
            raise MismatchedContext(
                f"(n={self.n}, d={self.degree}) vs (n={other.n}, d={other.degree})")

    def __add__(self, other: "NcSeries") -> "NcSeries":
        self._check_context(other)
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0j) + c
        return NcSeries(self.n, self.degree, out)

    def __sub__(self, other: "NcSeries") -> "NcSeries":
        return self + other.scale(-1.0)

    def scale(self, c) -> "NcSeries":
        c = complex(c)
        return NcSeries(self.n, self.degree,
                        {w: c * v for w, v in self.coeffs.items()})

    def __mul__(self, other: "NcSeries") -> "NcSeries":
        return multiply(self, other)


def multiply(a: NcSeries, b: NcSeries) -> NcSeries:
    """Cauchy product on the free monoid, truncated: c_gamma = sum_{alpha.beta=gamma} a_alpha b_beta."""
    a._check_context(b)
    out = {}
    for wa, ca in a.coeffs.items():
        for wb, cb in b.coeffs.items():
            if len(wa) + len(wb) > a.degree:
                continue
            w = wa + wb
            out[w] = out.get(w, 0j) + ca * cb
    return NcSeries(a.n, a.degree, out)


def series_residual(a: NcSeries, b: NcSeries) -> float:
    """Max absolute coefficient difference over the union of supports."""
    a._check_context(b)
    words = set(a.coeffs) | set(b.coeffs)
    return max((abs(a.coeff(w) - b.coeff(w)) for w in words), default=0.0)


# ---------------------------------------------------------------------------
# tuples of series
# ---------------------------------------------------------------------------

@dataclass
class NcSeriesTuple:
    """n series over the same n variables with a shared truncation degree."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("empty tuple")
        n, d = comps[0].n, comps[0].degree
        if len(comps) != n:
            raise ValueError(f"need exactly n={n} components, got {len(comps)}")
        for f in comps:
            if f.n != n or f.degree != d:
                raise MismatchedContext("components disagree on (n, degree)")
        self.components = comps

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def degree(self) -> int:
        return self.components[0].degree

    @property
    def vanishes_at_zero(self) -> bool:
        return all(abs(f.constant_term()) == 0.0 for f in self.components)

    @property
    def is_polynomial(self) -> bool:
        # truncated data is always a polynomial; kept as an explicit flag
        # so callers can gate the automorphism check
        return True

    def max_word_length(self) -> int:
        return max(f.max_word_length() for f in self.components)

    def __getitem__(self, i: int) -> NcSeries:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return self.n

    @staticmethod
    def identity(n: int, degree: int) -> "NcSeriesTuple":
        """The tuple id = (Z_1, ..., Z_n)."""
        return NcSeriesTuple(tuple(
            NcSeries.variable(n, degree, i) for i in range(1, n + 1)))

    def with_degree(self, degree: int) -> "NcSeriesTuple":
        """Re-embed at another truncation degree (must not drop coefficients)."""
        if degree < self.max_word_length():
            raise ValueError("new degree would truncate stored coefficients")
        return NcSeriesTuple(tuple(
            NcSeries(self.n, degree, dict(f.coeffs)) for f in self.components))


def tuple_residual(F: NcSeriesTuple, G: NcSeriesTuple) -> float:
    if F.n != G.n or F.degree != G.degree:
        raise MismatchedContext("tuple contexts differ")
    return max(series_residual(f, g) for f, g in zip(F, G))


def compose(F, G: NcSeriesTuple):
    """Substitute G_i for Z_i in F (a series or a tuple), truncating.

    Each word alpha = i_1 ... i_k of F contributes
    a_alpha * G_{i_1} * ... * G_{i_k}; the constant term of F survives
    unchanged.  G must vanish at zero, otherwise arbitrarily long words of
    G would feed every output degree and the truncation would be wrong.
    """
    if not G.vanishes_at_zero:
        raise CompositionRequiresZeroConstant("substituted tuple has G(0) != 0")
    if isinstance(F, NcSeriesTuple):
        if F.n != G.n or F.degree != G.degree:
            raise MismatchedContext("tuple contexts differ")
        cache = {}
        return NcSeriesTuple(tuple(_compose_one(f, G, cache) for f in F))
    return _compose_one(F, G, {})


def _compose_one(f: NcSeries, G: NcSeriesTuple, cache: dict) -> NcSeries:
    if f.n != G.n or f.degree != G.degree:
        raise MismatchedContext("series/tuple contexts differ")
    n, d = f.n, f.degree
    one = NcSeries.monomial(n, d, EMPTY_WORD)
    cache.setdefault(EMPTY_WORD, one)

    def word_product(w: Word) -> NcSeries:
        # products of G-components memoized along prefixes
        if w not in cache:
            cache[w] = multiply(word_product(w[:-1]), G[w[-1] - 1])
        return cache[w]

    out = NcSeries.zero(n, d)
    for w, c in f.coeffs.items():
        out = out + word_product(w).scale(c)
    return out


def jacobian_at_zero(F: NcSeriesTuple):
    """Matrix of degree-1 coefficients J[i][j] = coeff of Z_j in F_i, and det."""
    n = F.n
    J = np.zeros((n, n), dtype=complex)
    for i, f in enumerate(F):
        for j in range(1, n + 1):
            J[i, j - 1] = f.coeff((j,))
    return J, complex(np.linalg.det(J))


def invert_composition(F: NcSeriesTuple, tol: Tolerances = DEFAULT_TOL) -> NcSeriesTuple:
    """Compositional inverse G with F o G = G o F = id through the degree.

    Degree-by-degree fixed point: with A the linear part of F and
    H := F - A.Z (order >= 2),

        G  <-  A^{-1} (Z - H o G)

    starting from G = A^{-1} Z gains one correct degree per sweep, so
    degree-1 sweeps finish the job at truncation degree d.
    """
    if not F.vanishes_at_zero:
        raise NonzeroConstantTerm("inversion requires F(0) = 0")
    A, detA = jacobian_at_zero(F)
    if abs(detA) <= tol.check_abs:
        raise SingularJacobian(f"|det J_F(0)| = {abs(detA):.3e}")
    n, d = F.n, F.degree
    Ainv = np.linalg.inv(A)
    Z = NcSeriesTuple.identity(n, d)

    def lincomb(M, T: NcSeriesTuple) -> NcSeriesTuple:
        comps = []
        for i in range(n):
            acc = NcSeries.zero(n, d)
            for j in range(n):
                if M[i, j] != 0:
                    acc = acc + T[j].scale(M[i, j])
            comps.append(acc)
        return NcSeriesTuple(tuple(comps))

    # H = F - A.Z has only terms of order >= 2
    H = NcSeriesTuple(tuple(
        (F[i] - lincomb(A, Z)[i]) for i in range(n)))
    G = lincomb(Ainv, Z)
    for _ in range(max(0, d - 1)):
        HoG = compose(H, G)
        G = lincomb(Ainv, NcSeriesTuple(tuple(Z[i] - HoG[i] for i in range(n))))
    return NcSeriesTuple(tuple(g.prune(0.0) for g in G))


def property_A_check(F: NcSeriesTuple, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Is F a polynomial automorphism (polynomial compositional inverse)?

    Requires the working degree to satisfy d >= 2 deg(F) so a truncated
    non-polynomial inverse cannot masquerade as polynomial.  The computed
    inverse G is re-composed with F exactly (at a degree large enough to
    hold the full polynomial product); both compositions must equal id.
    """
    degF = F.max_word_length()
    if F.degree < 2 * degF:
        raise ValueError(f"need degree >= 2*deg(F) = {2 * degF}, have {F.degree}")
    try:
        G = invert_composition(F, tol)
    except (SingularJacobian, NonzeroConstantTerm):
        return False
    G = NcSeriesTuple(tuple(g.prune(1e-12) for g in G))
    degG = G.max_word_length()
    dfull = max(1, degF * degG)
    Fbig, Gbig = F.with_degree(dfull), G.with_degree(dfull)
    idbig = NcSeriesTuple.identity(F.n, dfull)
    return (tuple_residual(compose(Fbig, Gbig), idbig) <= 1e-10
            and tuple_residual(compose(Gbig, Fbig), idbig) <= 1e-10)


@dataclass(frozen=True)
class RadiusReport:
    """Per-degree coefficient norms s_k = (sum_{|alpha|=k} |a_alpha|^2)^(1/2)."""

    per_component: tuple   # tuple of lists, s[k] for k = 0..d
    proxy_per_component: tuple  # max_{1<=k<=d} s_k^(1/k)

    @property
    def proxy(self) -> float:
        return max(self.proxy_per_component)


def radius_diagnostics(F: NcSeriesTuple) -> RadiusReport:
    """Finite-degree growth proxy for the radius of convergence (advisory)."""
    per, proxies = [], []
    for f in F:
        s = [0.0] * (F.degree + 1)
        for w, c in f.coeffs.items():
            s[len(w)] += abs(c) ** 2
        s = [math.sqrt(v) for v in s]
        per.append(s)
        proxies.append(max((s[k] ** (1.0 / k) for k in range(1, F.degree + 1)
                            if s[k] > 0), default=0.0))
    return RadiusReport(tuple(per), tuple(proxies))
