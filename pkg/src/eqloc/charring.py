"""Exact arithmetic in the representation ring of a torus and its localizations.

``LaurentPoly`` models R(T) = Z[M] as a sparse map from exponent vectors to
integer coefficients.  ``LocalizedClass`` is a numerator over a multiset of
factors (1 - e^{-w}); ``TruncatedSeries`` and ``LocalizedSeries`` carry the
images of these under the Chern character in Q[[u_1, ..., u_n]] cut off at a
fixed total degree.
"""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from math import factorial
from typing import Iterable, Mapping, Sequence

from .lattice import dot, first_nonzero_positive

Character = tuple[int, ...]

DEFAULT_DEGREE = 10


class RankMismatch(ValueError):
    pass


class NotDivisible(ArithmeticError):
    """Raised when (1 - e^{-w}) does not divide a Laurent polynomial.

    ``remainder`` is the canonical residue of the dividend modulo the factor:
    the coefficient sum of each coset of Z*w, placed at the coset's
    representative.  It is zero exactly when the division succeeds.
    """

    def __init__(self, weight: Character, remainder: "LaurentPoly"):
        self.weight = weight
        self.remainder = remainder
        super().__init__(f"not divisible by (1 - e^{{-{format_exponent(tuple(weight))}}})")


class TruncationTooSmall(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# Laurent polynomials
# --------------------------------------------------------------------------


class LaurentPoly:
    """Finite Z-combination of formal exponentials e^lambda."""

    __slots__ = ("rank", "terms", "_hash")

    def __init__(self, rank: int, terms: Mapping[Character, int] | None = None):
        self.rank = rank
        clean: dict[Character, int] = {}
        if terms:
            for e, c in terms.items():
                if c:
                    e = tuple(e)
                    if len(e) != rank:
                        raise RankMismatch(f"exponent {e} has wrong length for rank {rank}")
                    clean[e] = int(c)
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, rank: int, terms: dict[Character, int]) -> "LaurentPoly":
        # terms must already be clean
        obj = cls.__new__(cls)
        obj.rank = rank
        obj.terms = terms
        obj._hash = None
        return obj

    @classmethod
    def zero(cls, rank: int) -> "LaurentPoly":
        return cls._raw(rank, {})

    @classmethod
    def one(cls, rank: int) -> "LaurentPoly":
        return cls._raw(rank, {(0,) * rank: 1})

    @classmethod
    def const(cls, rank: int, c: int) -> "LaurentPoly":
        return cls._raw(rank, {(0,) * rank: c} if c else {})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coeff: int = 1) -> "LaurentPoly":
        e = tuple(exponent)
        return cls._raw(len(e), {e: coeff} if coeff else {})

    # -- basic protocol ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.const(self.rank, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.rank == other.rank and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rank, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"LaurentPoly({format_laurent(self)!r})"

    def __str__(self) -> str:
        return format_laurent(self)

    def _check(self, other: "LaurentPoly") -> None:
        if self.rank != other.rank:
            raise RankMismatch(f"rank {self.rank} vs {other.rank}")

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            return LaurentPoly.const(self.rank, other)
        if isinstance(other, LaurentPoly):
            self._check(other)
            return other
        return NotImplemented

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return LaurentPoly._raw(self.rank, out)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._raw(self.rank, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "LaurentPoly":
        return (-self) + other

    def __mul__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            if other == 0:
                return LaurentPoly.zero(self.rank)
            return LaurentPoly._raw(self.rank, {e: c * other for e, c in self.terms.items()})
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        self._check(other)
        out: dict[Character, int] = defaultdict(int)
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                out[tuple(x + y for x, y in zip(ea, eb))] += ca * cb
        return LaurentPoly._raw(self.rank, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentPoly":
        if k < 0:
            if self.is_unit():
                (e, c), = self.terms.items()
                return LaurentPoly.monomial(tuple(x * k for x in e), c ** (-k))
            raise ValueError("negative power of a non-unit")
        out = LaurentPoly.one(self.rank)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, exponent: Sequence[int]) -> "LaurentPoly":
        """Multiply by e^exponent."""
        s = tuple(exponent)
        return LaurentPoly._raw(self.rank, {tuple(a + b for a, b in zip(e, s)): c for e, c in self.terms.items()})

    # -- queries -------------------------------------------------------------

    def is_unit(self) -> bool:
        return len(self.terms) == 1 and next(iter(self.terms.values())) in (1, -1)

    def augmentation(self) -> int:
        """Value at e^lambda = 1 for all lambda (the rank of a virtual representation)."""
        return sum(self.terms.values())

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.rank, 0)

    def support(self) -> list[Character]:
        return sorted(self.terms)

    def to_pairs(self) -> list[tuple[int, list[int]]]:
        """Serialization: (coefficient, exponent) pairs in lexicographic exponent order."""
        return [(self.terms[e], list(e)) for e in sorted(self.terms)]

    @classmethod
    def from_pairs(cls, rank: int, pairs: Iterable[tuple[int, Sequence[int]]]) -> "LaurentPoly":
        out: dict[Character, int] = defaultdict(int)
        for c, e in pairs:
            out[tuple(e)] += c
        return cls(rank, out)

    def exact_div(self, g: "LaurentPoly") -> "LaurentPoly | None":
        """Exact quotient self / g in Z[M], or None if g does not divide.

        Long division against the lexicographic group order on Z^n.  The
        Newton polytope of the quotient lies in the box given by coordinate
        differences of the extremes, so the search is finite.
        """
        self._check(g)
        if g.is_zero():
            raise ZeroDivisionError("division by zero Laurent polynomial")
        if self.is_zero():
            return self
        n = self.rank
        lo = [min(e[i] for e in self.terms) - min(e[i] for e in g.terms) for i in range(n)]
        hi = [max(e[i] for e in self.terms) - max(e[i] for e in g.terms) for i in range(n)]
        if any(a > b for a, b in zip(lo, hi)):
            return None
        lead_g = max(g.terms)
        cg = g.terms[lead_g]
        rem = dict(self.terms)
        quot: dict[Character, int] = {}
        while rem:
            lead = max(rem)
            c = rem[lead]
            if c % cg:
                return None
            qe = tuple(a - b for a, b in zip(lead, lead_g))
            if any(x < a or x > b for x, a, b in zip(qe, lo, hi)):
                return None
            qc = c // cg
            quot[qe] = qc
            for e, v in g.terms.items():
                k = tuple(a + b for a, b in zip(qe, e))
                nv = rem.get(k, 0) - qc * v
                if nv:
                    rem[k] = nv
                else:
                    rem.pop(k, None)
        return LaurentPoly._raw(n, quot)


def _line_key(e: Character, w: Character, j: int) -> tuple[Character, int]:
    # representative of e modulo Z*w and the position of e on its line
    k = e[j] // w[j]
    rep = tuple(a - k * b for a, b in zip(e, w))
    return rep, k


def divide_exact(f: LaurentPoly, weight: Sequence[int]) -> LaurentPoly:
    """Return q with q * (1 - e^{-weight}) = f, or raise NotDivisible.

    Exponents are grouped into cosets of Z*weight; along each coset the
    problem is division of a one-variable polynomial by (1 - x), which
    succeeds iff the coefficient sum vanishes, and the quotient is given by
    partial sums taken from the top of the coset down.
    """
    w = tuple(weight)
    if len(w) != f.rank:
        raise RankMismatch(f"weight {w} has wrong length for rank {f.rank}")
    if not any(w):
        raise ValueError("divide_exact: weight must be nonzero")
    j = next(i for i, x in enumerate(w) if x)
    lines: dict[Character, dict[int, int]] = defaultdict(dict)
    for e, c in f.terms.items():
        rep, k = _line_key(e, w, j)
        lines[rep][k] = c
    quot: dict[Character, int] = {}
    bad: dict[Character, int] = {}
    for rep, line in lines.items():
        total = sum(line.values())
        if total:
            bad[rep] = total
            continue
        if bad:
            continue
        ks = sorted(line, reverse=True)
        acc = 0
        # f = sum a_k e^{rep + k w}; q = sum b_k e^{rep + k w} with b_k = sum_{i >= k} a_i
        for idx, k in enumerate(ks[:-1]):
            acc += line[k]
            if acc:
                for kk in range(k, ks[idx + 1], -1):
                    quot[tuple(a + kk * b for a, b in zip(rep, w))] = acc
    if bad:
        raise NotDivisible(w, LaurentPoly(f.rank, bad))
    return LaurentPoly._raw(f.rank, quot)


def is_divisible(f: LaurentPoly, weight: Sequence[int]) -> bool:
    try:
        divide_exact(f, weight)
    except NotDivisible:
        return False
    return True


def residue(f: LaurentPoly, weight: Sequence[int]) -> LaurentPoly:
    """Canonical residue of f modulo (1 - e^{-weight})."""
    try:
        divide_exact(f, weight)
    except NotDivisible as err:
        return err.remainder
    return LaurentPoly.zero(f.rank)


def lambda_minus_one(weights: Sequence[Sequence[int]], rank: int | None = None) -> LaurentPoly:
    """prod (1 - e^{-w}) over the given weights."""
    if rank is None:
        if not weights:
            raise ValueError("rank required for an empty weight list")
        rank = len(weights[0])
    out = LaurentPoly.one(rank)
    for w in weights:
        out = out * factor_poly(w)
    return out


def factor_poly(w: Sequence[int]) -> LaurentPoly:
    """The Laurent polynomial 1 - e^{-w}."""
    w = tuple(w)
    if not any(w):
        return LaurentPoly.zero(len(w))
    zero = (0,) * len(w)
    return LaurentPoly._raw(len(w), {zero: 1, tuple(-x for x in w): -1})


def adams(j: int, f):
    """Adams operation e^lambda -> e^{j lambda} on LaurentPoly or LocalizedClass."""
    if j < 1:
        raise ValueError("Adams operations are defined for j >= 1")
    if isinstance(f, LocalizedClass):
        return LocalizedClass(adams(j, f.numerator), [tuple(j * x for x in w) for w in f.denominator])
    return LaurentPoly._raw(f.rank, {tuple(j * x for x in e): c for e, c in f.terms.items()})


def restrict_characters(f: LaurentPoly, q: Sequence[Sequence[int]]) -> LaurentPoly:
    """Push exponents through the integer matrix q : Z^n -> Z^n' (rows of q)."""
    if any(len(row) != f.rank for row in q):
        raise RankMismatch("restriction matrix does not match lattice rank")
    out: dict[Character, int] = defaultdict(int)
    for e, c in f.terms.items():
        out[tuple(dot(row, e) for row in q)] += c
    return LaurentPoly(len(q), out)


# --------------------------------------------------------------------------
# Localized classes
# --------------------------------------------------------------------------


def canonical_factor(w: Sequence[int]) -> tuple[Character, LaurentPoly]:
    """Canonical direction for 1 - e^{-w}.

    Returns (w', u) with 1/(1 - e^{-w}) = u / (1 - e^{-w'}), where w' has a
    positive first nonzero coordinate and u is a unit (1 or -e^{w}).
    """
    w = tuple(w)
    if not any(w):
        raise ValueError("denominator weight must be nonzero")
    if first_nonzero_positive(w):
        return w, LaurentPoly.one(len(w))
    # 1 - e^{-w} = -e^{-w} (1 - e^{w}), and w' = -w
    return tuple(-x for x in w), LaurentPoly.monomial(w, -1)


class LocalizedClass:
    """numerator / prod (1 - e^{-w}) with canonical, greedily cancelled factors."""

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: LaurentPoly, denominator: Iterable[Sequence[int]] = (), *, normalize: bool = True):
        num = numerator
        den: list[Character] = []
        for w in denominator:
            cw, unit = canonical_factor(w)
            if len(cw) != num.rank:
                raise RankMismatch("denominator weight does not match numerator rank")
            den.append(cw)
            if not unit == 1:
                num = num * unit
        self.numerator = num
        self.denominator = tuple(sorted(den))
        if normalize:
            self._normalize()

    @classmethod
    def of(cls, f: LaurentPoly | int, rank: int | None = None) -> "LocalizedClass":
        if isinstance(f, int):
            assert rank is not None
            f = LaurentPoly.const(rank, f)
        return cls(f, ())

    @property
    def rank(self) -> int:
        return self.numerator.rank

    def _normalize(self) -> None:
        num = self.numerator
        if num.is_zero():
            self.denominator = ()
            return
        remaining = Counter(self.denominator)
        for w in sorted(remaining):
            while remaining[w]:
                try:
                    num = divide_exact(num, w)
                except NotDivisible:
                    break
                remaining[w] -= 1
        self.numerator = num
        self.denominator = tuple(sorted(remaining.elements()))

    def is_laurent(self) -> bool:
        return not self.denominator

    def to_laurent(self) -> LaurentPoly:
        if self.denominator:
            raise ValueError("class has a nontrivial denominator")
        return self.numerator

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def _coerce(self, other) -> "LocalizedClass":
        if isinstance(other, LocalizedClass):
            return other
        if isinstance(other, (LaurentPoly, int)):
            return LocalizedClass.of(other, self.rank)
        return NotImplemented

    def __add__(self, other) -> "LocalizedClass":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        ca, cb = Counter(self.denominator), Counter(other.denominator)
        common = ca | cb
        na = self.numerator * lambda_minus_one(list((common - ca).elements()), self.rank)
        nb = other.numerator * lambda_minus_one(list((common - cb).elements()), self.rank)
        return LocalizedClass(na + nb, common.elements())

    __radd__ = __add__

    def __neg__(self) -> "LocalizedClass":
        return LocalizedClass(-self.numerator, self.denominator, normalize=False)

    def __sub__(self, other) -> "LocalizedClass":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "LocalizedClass":
        return (-self) + other

    def __mul__(self, other) -> "LocalizedClass":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return LocalizedClass(self.numerator * other.numerator, self.denominator + other.denominator)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, LaurentPoly)):
            other = LocalizedClass.of(other, self.rank)
        if not isinstance(other, LocalizedClass):
            return NotImplemented
        if self.rank != other.rank:
            return False
        ca, cb = Counter(self.denominator), Counter(other.denominator)
        shared = ca & cb
        lhs = self.numerator * lambda_minus_one(list((cb - shared).elements()), self.rank)
        rhs = other.numerator * lambda_minus_one(list((ca - shared).elements()), self.rank)
        return lhs == rhs

    __hash__ = None  # equality is not structural

    def __repr__(self) -> str:
        return f"LocalizedClass({format_localized(self)!r})"

    def __str__(self) -> str:
        return format_localized(self)

    def to_dict(self) -> dict:
        return {"numerator": self.numerator.to_pairs(), "denominator": [list(w) for w in self.denominator]}

    def display_form(self) -> tuple[LaurentPoly, list[Character]]:
        """Choose factor orientations giving the simplest numerator.

        Returns (numerator, exponents) meaning numerator / prod (1 - e^{exponent}).
        Each factor may be written as 1 - e^{-w} or, absorbing -e^{-w}, as
        1 - e^{w}; the orientation minimizing (term count, total exponent
        size, lexicographic data) is chosen, deterministically.
        """
        best = None
        k = len(self.denominator)
        for flips in iproduct((False, True), repeat=k):
            num = self.numerator
            exps = []
            for w, flip in zip(self.denominator, flips):
                if flip:
                    # 1/(1 - e^{-w}) = -e^{w}/(1 - e^{w})
                    num = num * LaurentPoly.monomial(w, -1)
                    exps.append(tuple(w))
                else:
                    exps.append(tuple(-x for x in w))
            neg_lead = num.terms[max(num.terms)] < 0 if num.terms else False
            size = sum(abs(x) for e in num.terms for x in e)
            key = (len(num.terms), size, neg_lead, num.to_pairs(), exps)
            if best is None or key < best[0]:
                best = (key, num, exps)
        assert best is not None
        return best[1], sorted(best[2], reverse=True)


def localized_from_fraction(num: LaurentPoly, den_exponents: Sequence[Sequence[int]]) -> LocalizedClass:
    """Build num / prod (1 - e^{a}) for exponents a as written in display form."""
    return LocalizedClass(num, [tuple(-x for x in a) for a in den_exponents])


# --------------------------------------------------------------------------
# Bott elements
# --------------------------------------------------------------------------


def bott(j: int, weights: Sequence[tuple[Sequence[int], int]], rank: int | None = None) -> LocalizedClass:
    """theta^j of the virtual sum of characters: prod (1 + e^w + ... + e^{(j-1)w})^m."""
    if j < 1:
        raise ValueError("Bott element requires j >= 1")
    if rank is None:
        if not weights:
            raise ValueError("rank required for an empty weight list")
        rank = len(weights[0][0])
    num = LaurentPoly.one(rank)
    den: list[Character] = []
    for w, m in weights:
        w = tuple(w)
        if not any(w):
            if m < 0 and j != 1:
                raise ValueError("theta^j of a negative trivial summand is 1/j^m, not in R(T)")
            num = num * (j ** abs(m))
            continue
        theta = LaurentPoly(rank, {tuple(i * x for x in w): 1 for i in range(j)})
        if m >= 0:
            num = num * theta ** m
        else:
            # 1/theta^j(e^w) = (1 - e^w)/(1 - e^{jw})
            num = num * (LaurentPoly.one(rank) - LaurentPoly.monomial(w)) ** (-m)
            den.extend([tuple(-j * x for x in w)] * (-m))
    return LocalizedClass(num, den)


# --------------------------------------------------------------------------
# Truncated series in u_1, ..., u_n
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def monomials(rank: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """All exponent vectors of the given total degree, lexicographically descending."""
    if rank == 0:
        return ((),) if degree == 0 else ()
    out = []
    for first in range(degree, -1, -1):
        for rest in monomials(rank - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


class TruncatedSeries:
    """Power series with rational coefficients, discarding total degree > degree."""

    __slots__ = ("rank", "degree", "terms")

    def __init__(self, rank: int, degree: int, terms: Mapping[tuple[int, ...], Fraction] | None = None):
        self.rank = rank
        self.degree = degree
        self.terms = {}
        if terms:
            for a, c in terms.items():
                if c and sum(a) <= degree:
                    self.terms[tuple(a)] = Fraction(c)

    @classmethod
    def _raw(cls, rank, degree, terms):
        obj = cls.__new__(cls)
        obj.rank, obj.degree, obj.terms = rank, degree, terms
        return obj

    @classmethod
    def one(cls, rank: int, degree: int) -> "TruncatedSeries":
        return cls._raw(rank, degree, {(0,) * rank: Fraction(1)})

    @classmethod
    def linear(cls, weight: Sequence[int], degree: int) -> "TruncatedSeries":
        """The degree-one form sum w_i u_i."""
        n = len(weight)
        terms = {}
        if degree >= 1:
            for i, x in enumerate(weight):
                if x:
                    terms[tuple(int(i == k) for k in range(n))] = Fraction(x)
        return cls._raw(n, degree, terms)

    def _check(self, other: "TruncatedSeries") -> None:
        if self.rank != other.rank:
            raise RankMismatch("series of different rank")

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        d = min(self.degree, other.degree)
        out = {a: c for a, c in self.terms.items() if sum(a) <= d}
        for a, c in other.terms.items():
            if sum(a) <= d:
                v = out.get(a, 0) + c
                if v:
                    out[a] = v
                else:
                    out.pop(a, None)
        return TruncatedSeries._raw(self.rank, d, out)

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.rank, self.degree, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + (-other)

    def __mul__(self, other) -> "TruncatedSeries":
        if isinstance(other, (int, Fraction)):
            if not other:
                return TruncatedSeries._raw(self.rank, self.degree, {})
            return TruncatedSeries._raw(self.rank, self.degree, {a: c * other for a, c in self.terms.items()})
        self._check(other)
        d = min(self.degree, other.degree)
        by_a = _by_degree(self.terms, d)
        by_b = _by_degree(other.terms, d)
        out: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
        for da, la in by_a.items():
            for db, lb in by_b.items():
                if da + db > d:
                    continue
                for ka, va in la:
                    for kb, vb in lb:
                        out[tuple(x + y for x, y in zip(ka, kb))] += va * vb
        return TruncatedSeries._raw(self.rank, d, {a: c for a, c in out.items() if c})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.rank == other.rank and self.degree == other.degree and self.terms == other.terms

    __hash__ = None

    def truncate(self, degree: int) -> "TruncatedSeries":
        return TruncatedSeries._raw(self.rank, min(degree, self.degree), {a: c for a, c in self.terms.items() if sum(a) <= degree})

    def homogeneous(self, k: int) -> dict[tuple[int, ...], Fraction]:
        return {a: c for a, c in self.terms.items() if sum(a) == k}

    def valuation(self) -> int | None:
        """Lowest total degree with a nonzero coefficient, or None for 0."""
        if not self.terms:
            return None
        return min(sum(a) for a in self.terms)

    def scale_degrees(self, j: int) -> "TruncatedSeries":
        """Multiply the degree-k part by j^k."""
        return TruncatedSeries._raw(self.rank, self.degree, {a: c * j ** sum(a) for a, c in self.terms.items()})

    def first_difference(self, other: "TruncatedSeries") -> tuple[tuple[int, ...], Fraction, Fraction] | None:
        """First (graded-lex) monomial where the two series differ, with both coefficients."""
        d = min(self.degree, other.degree)
        keys = {a for a in self.terms if sum(a) <= d} | {a for a in other.terms if sum(a) <= d}
        for a in sorted(keys, key=lambda a: (sum(a), tuple(-x for x in a))):
            x, y = self.terms.get(a, Fraction(0)), other.terms.get(a, Fraction(0))
            if x != y:
                return a, x, y
        return None

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "terms": [[list(a), str(c)] for a, c in sorted(self.terms.items(), key=lambda t: (sum(t[0]), tuple(-x for x in t[0])))],
        }

    def __repr__(self) -> str:
        return f"TruncatedSeries({format_series(self.terms)!r}, degree={self.degree})"

    def __str__(self) -> str:
        return format_series(self.terms) + f" + O({self.degree + 1})"


def _by_degree(terms, d):
    out: dict[int, list] = defaultdict(list)
    for a, c in terms.items():
        k = sum(a)
        if k <= d:
            out[k].append((a, c))
    return out


@lru_cache(maxsize=4096)
def _linear_power(weight: Character, k: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    # (sum w_i u_i)^k by the multinomial theorem
    out = []
    for a in monomials(len(weight), k):
        coeff = factorial(k)
        val = 1
        for ai, wi in zip(a, weight):
            coeff //= factorial(ai)
            val *= wi ** ai
        if coeff * val:
            out.append((a, Fraction(coeff * val)))
    return tuple(out)


def substitute_univariate(coeffs: Sequence[Fraction], weight: Sequence[int], degree: int) -> TruncatedSeries:
    """sum_k coeffs[k] * (w . u)^k as a truncated series."""
    w = tuple(weight)
    out: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
    for k in range(min(degree, len(coeffs) - 1) + 1):
        ck = coeffs[k]
        if not ck:
            continue
        for a, v in _linear_power(w, k):
            out[a] += ck * v
    return TruncatedSeries._raw(len(w), degree, {a: c for a, c in out.items() if c})


def chern_character(f: LaurentPoly, degree: int = DEFAULT_DEGREE) -> TruncatedSeries:
    """ch(e^m) = exp(m . u).  Coefficient of u^a is (sum_m c_m m^a) / a!."""
    if degree < 0:
        raise ValueError("truncation degree must be nonnegative")
    n = f.rank
    out: dict[tuple[int, ...], Fraction] = {}
    items = list(f.terms.items())
    for k in range(degree + 1):
        for a in monomials(n, k):
            s = 0
            for e, c in items:
                v = c
                for ei, ai in zip(e, a):
                    if ai:
                        v *= ei ** ai
                        if not v:
                            break
                s += v
            if s:
                denom = 1
                for ai in a:
                    denom *= factorial(ai)
                out[a] = Fraction(s, denom)
    return TruncatedSeries._raw(n, degree, out)


@lru_cache(maxsize=None)
def _inverse_exp_quotient(degree: int) -> tuple[Fraction, ...]:
    # coefficients of x / (1 - e^{-x}) obtained by inverting
    # (1 - e^{-x})/x = sum_k (-1)^k x^k / (k+1)!  term by term
    s = [Fraction((-1) ** k, factorial(k + 1)) for k in range(degree + 1)]
    inv = [Fraction(1)]
    for k in range(1, degree + 1):
        inv.append(-sum(s[i] * inv[k - i] for i in range(1, k + 1)))
    return tuple(inv)


class LocalizedSeries:
    """numerator / prod(w_i . u), numerator a truncated series."""

    __slots__ = ("numerator", "denominator_weights")

    def __init__(self, numerator: TruncatedSeries, denominator_weights: Sequence[Character]):
        self.numerator = numerator
        self.denominator_weights = tuple(tuple(w) for w in denominator_weights)

    @property
    def valuation(self) -> int | None:
        v = self.numerator.valuation()
        return None if v is None else v - len(self.denominator_weights)

    def leading_term(self) -> "LeadingTerm":
        v = self.numerator.valuation()
        if v is None:
            raise TruncationTooSmall(f"numerator vanishes through degree {self.numerator.degree}")
        return LeadingTerm(self.numerator.homogeneous(v), self.denominator_weights, self.numerator.rank)

    def __repr__(self) -> str:
        return f"LocalizedSeries(valuation={self.valuation}, degree={self.numerator.degree})"


def ch_localized(x: LocalizedClass, degree: int = DEFAULT_DEGREE) -> LocalizedSeries:
    """Expand ch(x); each 1/(1 - e^{-w}) becomes (1/w) * (w / (1 - e^{-w}))."""
    num = chern_character(x.numerator, degree)
    coeffs = _inverse_exp_quotient(degree)
    for w in x.denominator:
        num = num * substitute_univariate(coeffs, w, degree)
    return LocalizedSeries(num, x.denominator)


# --------------------------------------------------------------------------
# Leading terms: homogeneous rational functions compared exactly
# --------------------------------------------------------------------------


def poly_mul(a: Mapping[tuple[int, ...], Fraction], b: Mapping[tuple[int, ...], Fraction]) -> dict[tuple[int, ...], Fraction]:
    out: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
    for ka, va in a.items():
        for kb, vb in b.items():
            out[tuple(x + y for x, y in zip(ka, kb))] += va * vb
    return {k: v for k, v in out.items() if v}


def linear_poly(w: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
    n = len(w)
    return {tuple(int(i == k) for k in range(n)): Fraction(x) for i, x in enumerate(w) if x}


def product_of_linear(weights: Iterable[Sequence[int]], rank: int) -> dict[tuple[int, ...], Fraction]:
    out = {(0,) * rank: Fraction(1)}
    for w in weights:
        out = poly_mul(out, linear_poly(w))
    return out


class LeadingTerm:
    """Homogeneous numerator over a product of linear forms."""

    __slots__ = ("numerator", "denominator_weights", "rank")

    def __init__(self, numerator: Mapping[tuple[int, ...], Fraction], denominator_weights: Sequence[Sequence[int]], rank: int):
        self.numerator = {tuple(k): Fraction(v) for k, v in numerator.items() if v}
        self.denominator_weights = tuple(tuple(w) for w in denominator_weights)
        self.rank = rank

    @property
    def degree(self) -> int:
        if not self.numerator:
            return 0
        return sum(next(iter(self.numerator))) - len(self.denominator_weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LeadingTerm):
            return NotImplemented
        lhs = poly_mul(self.numerator, product_of_linear(other.denominator_weights, self.rank))
        rhs = poly_mul(other.numerator, product_of_linear(self.denominator_weights, self.rank))
        return lhs == rhs

    __hash__ = None

    def __str__(self) -> str:
        num = format_series(self.numerator)
        den = "".join(f"({format_linear(w)})" for w in self.denominator_weights)
        return f"({num})/({den})" if den else num

    __repr__ = __str__

    def to_dict(self) -> dict:
        return {
            "numerator": [[list(a), str(c)] for a, c in sorted(self.numerator.items(), reverse=True)],
            "denominator": [list(w) for w in self.denominator_weights],
        }


# --------------------------------------------------------------------------
# Text syntax: e^{a*u1+b*u2}
# --------------------------------------------------------------------------


def _var_names(rank: int, names: Sequence[str] | None) -> list[str]:
    return list(names) if names else [f"u{i + 1}" for i in range(rank)]


def format_exponent(e: Sequence[int], names: Sequence[str] | None = None) -> str:
    names = _var_names(len(e), names)
    parts = []
    for x, v in zip(e, names):
        if not x:
            continue
        mag = "" if abs(x) == 1 else f"{abs(x)}*"
        sign = "-" if x < 0 else ("+" if parts else "")
        parts.append(f"{sign}{mag}{v}")
    return "".join(parts) or "0"


format_linear = format_exponent


def format_laurent(f: LaurentPoly, names: Sequence[str] | None = None) -> str:
    if f.is_zero():
        return "0"
    out = []
    for e in sorted(f.terms):
        c = f.terms[e]
        if any(e):
            body = f"e^{{{format_exponent(e, names)}}}"
            body = body if abs(c) == 1 else f"{abs(c)}*{body}"
        else:
            body = str(abs(c))
        if not out:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


def format_localized(x: LocalizedClass, names: Sequence[str] | None = None) -> str:
    num, exps = x.display_form()
    ns = format_laurent(num, names)
    if not exps:
        return ns
    if len(num) > 1:
        ns = f"({ns})"
    den = "".join(f"(1 - e^{{{format_exponent(a, names)}}})" for a in exps)
    return f"{ns}/({den})" if len(exps) > 1 else f"{ns}/{den}"


def format_series(terms: Mapping[tuple[int, ...], Fraction], names: Sequence[str] | None = None) -> str:
    if not terms:
        return "0"
    keys = sorted(terms, key=lambda a: (sum(a), tuple(-x for x in a)))
    out = []
    for a in keys:
        c = terms[a]
        names_ = _var_names(len(a), names)
        mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(names_, a) if k)
        mag = abs(c)
        if mono:
            body = mono if mag == 1 else f"{mag}*{mono}"
        else:
            body = str(mag)
        if not out:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


class ParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|(e\^\{[^}]*\})|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def parse_exponent(text: str, rank: int, names: Sequence[str] | None = None) -> Character:
    """Parse a linear form like ``-2*u1+u2`` or ``-2t``."""
    names = _var_names(rank, names)
    index = {v: i for i, v in enumerate(names)}
    if rank == 1:
        index.setdefault("t", 0)
        index.setdefault("u", 0)
    s = text.replace(" ", "")
    if s in ("", "0"):
        return (0,) * rank
    out = [0] * rank
    for m in re.finditer(r"([+-]?)(\d*)\*?([A-Za-z_][A-Za-z_0-9]*)?", s):
        if not m.group(0):
            continue
        sign = -1 if m.group(1) == "-" else 1
        num = int(m.group(2)) if m.group(2) else 1
        var = m.group(3)
        if var is None:
            if m.group(2):
                raise ParseError(f"constant term in exponent {text!r}")
            continue
        if var not in index:
            raise ParseError(f"unknown variable {var!r} in exponent {text!r}")
        out[index[var]] += sign * num
    # reject garbage the regex skipped over
    rebuilt = re.sub(r"([+-]?)(\d*)\*?([A-Za-z_][A-Za-z_0-9]*)", "", s)
    if rebuilt:
        raise ParseError(f"malformed exponent {text!r}")
    return tuple(out)


def parse_laurent(text: str, rank: int, names: Sequence[str] | None = None) -> LaurentPoly:
    """Parse sums and products of integers, ``e^{...}`` and parenthesized groups.

    Grammar::

        expr   := term (('+' | '-') term)*
        term   := factor ('*'? factor)*
        factor := '-' factor | INT | 'e^{' linear '}' | '(' expr ')' ['^' INT]
    """
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot tokenize {text[pos:]!r}")
        pos = m.end()
        if m.group(1):
            tokens.append(("int", int(m.group(1))))
        elif m.group(2):
            tokens.append(("exp", parse_exponent(m.group(2)[3:-1], rank, names)))
        elif m.group(3):
            raise ParseError(f"bare identifier {m.group(3)!r}; write e^{{...}}")
        elif m.group(4) and not m.group(4).isspace():
            tokens.append(("op", m.group(4)))
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else (None, None)

    def take():
        nonlocal i
        tok = peek()
        i += 1
        return tok

    def expr() -> LaurentPoly:
        val = term()
        while peek() in (("op", "+"), ("op", "-")):
            _, op = take()
            rhs = term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term() -> LaurentPoly:
        val = factor()
        while True:
            kind, v = peek()
            if (kind, v) == ("op", "*"):
                take()
                val = val * factor()
            elif kind in ("int", "exp") or (kind, v) == ("op", "("):
                val = val * factor()
            else:
                return val

    def factor() -> LaurentPoly:
        kind, v = take()
        if (kind, v) == ("op", "-"):
            return -factor()
        if kind == "int":
            return LaurentPoly.const(rank, v)
        if kind == "exp":
            return LaurentPoly.monomial(v)
        if (kind, v) == ("op", "("):
            val = expr()
            if take() != ("op", ")"):
                raise ParseError("unbalanced parentheses")
            if peek() == ("op", "^"):
                take()
                k, p = take()
                if k != "int":
                    raise ParseError("exponent of a group must be an integer")
                val = val ** p
            return val
        raise ParseError(f"unexpected token {v!r}")

    if not tokens:
        raise ParseError("empty expression")
    out = expr()
    if i != len(tokens):
        raise ParseError(f"trailing input near token {tokens[i][1]!r}")
    return out
