"""Fixed-point localization on complete fans.

A class is represented by its tuple of restrictions to the fixed points
(maximal cones).  Integration sums restriction times multiplicity; GKM and
piecewise-exponential checks decide whether a tuple can come from a class.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .charring import (
    LaurentPoly,
    LocalizedClass,
    NotDivisible,
    ParseError,
    adams,
    divide_exact,
    parse_laurent,
    restrict_characters,
)
from .fan import Cone, Fan, FanNotComplete, TDivisor, divisor_polytope, divisor_vertex, lattice_points, walls
from .lattice import saturated_span
from .multiplicity import em_orbit_closure, em_point


class NonIntegralResult(ArithmeticError):
    """A localized sum kept a denominator, so the tuple is not a genuine class."""

    def __init__(self, value: LocalizedClass):
        super().__init__(f"integral has a surviving denominator {list(value.denominator)}")
        self.value = value


class NotPiecewiseExponential(ValueError):
    pass


class SingularPairing(ArithmeticError):
    pass


@dataclass(frozen=True)
class FixedPointTuple:
    """Restrictions f_p indexed by fixed point ids 0..k-1 (maximal cone positions)."""

    entries: tuple[LaurentPoly, ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, LaurentPoly], keys: Sequence[int]) -> "FixedPointTuple":
        missing = [k for k in keys if k not in mapping]
        if missing:
            raise KeyError(f"tuple has no entry for fixed point(s) {missing}")
        extra = [k for k in mapping if k not in keys]
        if extra:
            raise KeyError(f"tuple has entries for unknown fixed point(s) {extra}")
        return cls(tuple(mapping[k] for k in keys))

    @classmethod
    def constant(cls, value: int, count: int, rank: int) -> "FixedPointTuple":
        return cls(tuple(LaurentPoly.const(rank, value) for _ in range(count)))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k: int) -> LaurentPoly:
        return self.entries[k]

    def map(self, fn: Callable[[LaurentPoly], LaurentPoly]) -> "FixedPointTuple":
        return FixedPointTuple(tuple(fn(x) for x in self.entries))

    def __add__(self, other: "FixedPointTuple") -> "FixedPointTuple":
        return FixedPointTuple(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __mul__(self, other) -> "FixedPointTuple":
        if isinstance(other, FixedPointTuple):
            return FixedPointTuple(tuple(a * b for a, b in zip(self.entries, other.entries)))
        return FixedPointTuple(tuple(a * other for a in self.entries))

    __rmul__ = __mul__


@dataclass
class CheckResult:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _require(fan: Fan, f: FixedPointTuple) -> None:
    if not fan.complete:
        raise FanNotComplete("localization needs a complete fan")
    if len(f) != len(fan.maximal_index):
        raise KeyError(f"tuple has {len(f)} entries for {len(fan.maximal_index)} fixed points")


def localized_sum(fan: Fan, f: FixedPointTuple, weights: Sequence[LocalizedClass] | None = None) -> LocalizedClass:
    ems = weights if weights is not None else [em_point(fan, c) for c in fan.maximal]
    total = LocalizedClass.of(0, fan.rank)
    for e, x in zip(ems, f.entries):
        if not x.is_zero():
            total = total + e * x
    return total


def integrate(fan: Fan, f: FixedPointTuple) -> LaurentPoly:
    """sum_p em_p * f_p, which must be a Laurent polynomial."""
    _require(fan, f)
    total = localized_sum(fan, f)
    if not total.is_laurent():
        raise NonIntegralResult(total)
    return total.to_laurent()


def divisor_tuple(fan: Fan, D: TDivisor) -> FixedPointTuple:
    return FixedPointTuple(tuple(LaurentPoly.monomial(divisor_vertex(fan, D, c)) for c in fan.maximal))


def euler_char(fan: Fan, D: TDivisor) -> LaurentPoly:
    return integrate(fan, divisor_tuple(fan, D))


def brion_oracle(fan: Fan, D: TDivisor, backend: str | None = None) -> LaurentPoly:
    """Sum of e^m over lattice points of the divisor polytope."""
    pts = lattice_points(divisor_polytope(fan, D), backend=backend)
    return LaurentPoly(fan.rank, {p: 1 for p in pts})


def gkm_check(fan: Fan, f: FixedPointTuple) -> CheckResult:
    """f_sigma - f_sigma' divisible by 1 - e^{-chi} across every wall."""
    _require(fan, f)
    bad = []
    for w in walls(fan):
        try:
            divide_exact(f[w.left] - f[w.right], w.weight)
        except NotDivisible as err:
            bad.append((w, err.remainder))
    return CheckResult(not bad, bad)


def face_restriction(tau: Cone, n: int) -> list[tuple[int, ...]]:
    """Rows of M -> Hom(span(tau) cap N, Z), a saturated quotient of M."""
    return saturated_span(tau.rays, n) if tau.rays else []


def _restrict(f: LaurentPoly, q: list[tuple[int, ...]]) -> LaurentPoly:
    if not q:
        return LaurentPoly.const(0, f.augmentation())
    return restrict_characters(f, q)


def pexp_check(fan: Fan, f: FixedPointTuple) -> CheckResult:
    """Agreement of restrictions on the common face of every pair of maximal cones."""
    _require(fan, f)
    n = fan.rank
    bad = []
    idx = fan.maximal_index
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            tau = fan.cone(set(idx[a]) & set(idx[b]))
            q = face_restriction(tau, n)
            if _restrict(f[a], q) != _restrict(f[b], q):
                bad.append((a, b, tau))
    return CheckResult(not bad, bad)


@dataclass(frozen=True)
class PExpClass:
    fan: Fan
    values: FixedPointTuple

    def __post_init__(self):
        res = pexp_check(self.fan, self.values)
        if not res:
            a, b, tau = res.violations[0]
            raise NotPiecewiseExponential(f"cones {a} and {b} disagree on face {list(tau.index)}")


def adams_pullback_check(fan: Fan, j: int, f: PExpClass | FixedPointTuple) -> CheckResult:
    """psi^j of a piecewise exponential is again one and still integrates into R(T)."""
    values = f.values if isinstance(f, PExpClass) else f
    g = values.map(lambda x: adams(j, x))
    res = pexp_check(fan, g)
    out = list(res.violations)
    try:
        integrate(fan, g)
    except NonIntegralResult as err:
        out.append(("integral", err.value))
    return CheckResult(not out, out)


# --------------------------------------------------------------------------
# dual bases
# --------------------------------------------------------------------------


def _det(m: list[list[LaurentPoly]], rank: int) -> LaurentPoly:
    k = len(m)
    if k == 0:
        return LaurentPoly.one(rank)
    memo: dict[tuple[int, frozenset[int]], LaurentPoly] = {}

    def minor(row: int, cols: frozenset[int]) -> LaurentPoly:
        if row == k:
            return LaurentPoly.one(rank)
        key = (row, cols)
        if key not in memo:
            total = LaurentPoly.zero(rank)
            for pos, c in enumerate(sorted(cols)):
                if m[row][c].is_zero():
                    continue
                term = m[row][c] * minor(row + 1, cols - {c})
                total = total + term if pos % 2 == 0 else total - term
            memo[key] = total
        return memo[key]

    return minor(0, frozenset(range(k)))


def _adjugate(m: list[list[LaurentPoly]], rank: int) -> list[list[LaurentPoly]]:
    k = len(m)
    adj = [[LaurentPoly.zero(rank)] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            sub = [[m[r][c] for c in range(k) if c != j] for r in range(k) if r != i]
            d = _det(sub, rank)
            adj[j][i] = d if (i + j) % 2 == 0 else -d
    return adj


@dataclass
class DualBasis:
    cones: list[Cone]
    pairing: list[list[LocalizedClass]]  # G[p][j] = em_p(V(tau_j))
    duals: list[FixedPointTuple]
    image: list[list[LaurentPoly]]  # image[i][j]: coefficient of [O_{V(tau_j)}] in f_i cap [O_X]
    determinant: LaurentPoly

    @property
    def determinant_up_to_sign(self) -> LaurentPoly:
        """The determinant with the sign fixed by a positive lex-leading coefficient.

        A change-of-basis determinant is only defined up to a unit; reordering
        either basis flips the sign.
        """
        d = self.determinant
        if d.is_zero() or d.terms[max(d.terms)] > 0:
            return d
        return -d


def dual_basis(fan: Fan, cones: Sequence[Cone]) -> DualBasis:
    """Tuples f_i with sum_p f_i(p) em_p(V(tau_j)) = delta_ij, and their images.

    The pairing matrix is cleared row by row to Laurent polynomials, inverted
    by adjugate over its determinant with exact division, and the image of
    each dual class in the orbit-closure basis is read off by integration.
    """
    n = fan.rank
    k = len(fan.maximal_index)
    if len(cones) != k:
        raise SingularPairing(f"need {k} basis cones, got {len(cones)}")
    cols = [em_orbit_closure(fan, t) for t in cones]
    G = [[cols[j][p] for j in range(k)] for p in range(k)]
    rows: list[list[LaurentPoly]] = []
    clear: list[LaurentPoly] = []
    for p in range(k):
        common: list[tuple[int, ...]] = []
        for x in G[p]:
            need = list(x.denominator)
            for w in common:
                if w in need:
                    need.remove(w)
            common += need
        # d_p = prod(1 - e^{-w}) over the common factors
        dp = LaurentPoly.one(n)
        for w in common:
            dp = dp * (LaurentPoly.one(n) - LaurentPoly.monomial(tuple(-x for x in w)))
        rows.append([(x * dp).to_laurent() for x in G[p]])
        clear.append(dp)
    det_h = _det(rows, n)
    if det_h.is_zero():
        raise SingularPairing("pairing matrix is singular")
    adj = _adjugate(rows, n)
    duals = []
    for i in range(k):
        vals = []
        for p in range(k):
            q = (adj[i][p] * clear[p]).exact_div(det_h)
            if q is None:
                raise SingularPairing(f"dual entry ({i}, {p}) is not a Laurent polynomial")
            vals.append(q)
        duals.append(FixedPointTuple(tuple(vals)))
    ems = [em_point(fan, c) for c in fan.maximal]
    image = []
    for i in range(k):
        row = []
        for j in range(k):
            s = localized_sum(fan, duals[i] * duals[j], ems)
            if not s.is_laurent():
                raise NonIntegralResult(s)
            row.append(s.to_laurent())
        image.append(row)
    return DualBasis(list(cones), G, duals, image, _det(image, n))


def pairing(fan: Fan, f: FixedPointTuple, tau: Cone) -> LocalizedClass:
    """sum_p f_p em_p(V(tau)); a Laurent polynomial for genuine classes."""
    return localized_sum(fan, f, em_orbit_closure(fan, tau))


# --------------------------------------------------------------------------
# tuple files
# --------------------------------------------------------------------------


_CONE_LINE = re.compile(r"^cone\s+(\{[^}]*\}|\d+)\s*:\s*(.+)$")


def parse_cone_ref(fan: Fan, text: str, *, maximal: bool = False) -> int | Cone:
    """A cone given as ``{0,2}`` (ray indices) or an integer id.

    Integer ids refer to maximal cone positions when ``maximal`` is set and
    to the global cone order otherwise.
    """
    text = text.strip()
    if text.startswith("{"):
        body = text[1:-1].strip()
        idx = tuple(sorted(int(x) for x in body.split(",") if x.strip())) if body else ()
        if maximal:
            if idx not in fan.maximal_index:
                raise KeyError(f"{text} is not a maximal cone")
            return fan.maximal_index.index(idx)
        if not fan.has_cone(idx):
            raise KeyError(f"{text} is not a cone of the fan")
        return fan.cone(idx)
    k = int(text)
    if maximal:
        if not 0 <= k < len(fan.maximal_index):
            raise KeyError(f"no maximal cone {k}")
        return k
    cones = fan.cones
    if not 0 <= k < len(cones):
        raise KeyError(f"no cone with id {k}")
    return cones[k]


def parse_tuple(text: str, fan: Fan) -> FixedPointTuple:
    entries: dict[int, LaurentPoly] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CONE_LINE.match(line)
        if not m:
            raise ParseError(f"line {lineno}: expected 'cone <id>: <expression>'")
        try:
            k = parse_cone_ref(fan, m.group(1), maximal=True)
        except (KeyError, ValueError) as err:
            raise ParseError(f"line {lineno}: {err}") from None
        if k in entries:
            raise ParseError(f"line {lineno}: duplicate entry for cone {k}")
        try:
            entries[k] = parse_laurent(m.group(2), fan.rank)
        except ParseError as err:
            raise ParseError(f"line {lineno}: {err}") from None
    try:
        return FixedPointTuple.from_mapping(entries, range(len(fan.maximal_index)))
    except KeyError as err:
        raise ParseError(str(err)) from None
