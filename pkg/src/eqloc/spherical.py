"""Congruence systems for the SL2 surface catalogue and spherical skeletons.

Surfaces live over a rank-one lattice with generator t; q stands for
e^{-t} in comments.  Relations are sums of coefficient * f_p that must be
divisible by a product of factors 1 - e^{-chi}.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .charring import (
    LaurentPoly,
    LocalizedClass,
    NotDivisible,
    ParseError,
    divide_exact,
    parse_exponent,
    parse_laurent,
)
from .lattice import Vector


class HalfWeightNotIntegral(ValueError):
    pass


class NotMember(ArithmeticError):
    def __init__(self, residual: dict[str, LaurentPoly], pivot: str | None):
        where = f" at {pivot}" if pivot else ""
        super().__init__(f"tuple is not in the image (stuck{where})")
        self.residual = residual
        self.pivot = pivot


KINDS = ("point", "p1", "pv", "p1p1", "fn", "pn", "kn")


@dataclass(frozen=True)
class SurfaceKind:
    tag: str
    n: int | None = None

    def __post_init__(self):
        if self.tag not in KINDS:
            raise ValueError(f"unknown surface kind {self.tag!r}")
        if self.tag in ("fn", "pn", "kn"):
            if self.n is None or self.n < 1:
                raise ValueError(f"{self.tag} needs n >= 1")
        elif self.n is not None:
            raise ValueError(f"{self.tag} takes no parameter")

    @classmethod
    def parse(cls, text: str) -> "SurfaceKind":
        text = text.strip().lower()
        aliases = {"p(v)": "pv", "p1xp1": "p1p1", "pt": "point"}
        if ":" in text:
            tag, n = text.split(":", 1)
            return cls(aliases.get(tag, tag), int(n))
        return cls(aliases.get(text, text))

    def __str__(self) -> str:
        return f"{self.tag}:{self.n}" if self.n is not None else self.tag


@dataclass(frozen=True)
class CongruenceRelation:
    """sum coefficients[p] * f_p == 0 mod prod (1 - e^{-m}) for m in modulus."""

    coefficients: tuple[tuple[str, LaurentPoly], ...]
    modulus: tuple[Vector, ...]
    name: str = ""

    def evaluate(self, f: Mapping[str, LaurentPoly]) -> LaurentPoly | None:
        """None if satisfied, otherwise the remainder at the first failing factor."""
        rank = self.coefficients[0][1].rank
        s = LaurentPoly.zero(rank)
        for p, c in self.coefficients:
            s = s + c * f[p]
        for m in self.modulus:
            try:
                s = divide_exact(s, m)
            except NotDivisible as err:
                return err.remainder
        return None


@dataclass
class SurfaceData:
    kind: SurfaceKind
    fixed_points: tuple[str, ...]
    tangent_weights: dict[str, list[Vector] | None]
    multiplicities: dict[str, LocalizedClass]
    relations: list[CongruenceRelation]
    basis: list[tuple[str, dict[str, LaurentPoly]]]  # (pivot, restriction tuple)
    names: list[str] = field(default_factory=list)


def _m(k: int) -> LaurentPoly:
    return LaurentPoly.monomial((k,))


def _one_minus(k: int) -> LaurentPoly:
    """1 - e^{-k t} (so 1 - q^k)."""
    return LaurentPoly.one(1) - _m(-k)


def _rel(name: str, coeffs: dict[str, LaurentPoly], *modulus: int) -> CongruenceRelation:
    return CongruenceRelation(tuple(coeffs.items()), tuple((k,) for k in modulus), name)


def _two(a: str, b: str, k: int) -> CongruenceRelation:
    return _rel(f"f_{a} - f_{b} mod (1-e^{{-{k}t}})", {a: LaurentPoly.one(1), b: -LaurentPoly.one(1)}, k)


def _em(weights: list[int]) -> LocalizedClass:
    return LocalizedClass(LaurentPoly.one(1), [(w,) for w in weights])


def _tuple(points: Sequence[str], values: Sequence[LaurentPoly | int]) -> dict[str, LaurentPoly]:
    return {p: (LaurentPoly.const(1, v) if isinstance(v, int) else v) for p, v in zip(points, values)}


def pn_printed_relation(n: int) -> CongruenceRelation:
    """The P_n three-term relation with the e^{nt} coefficient exactly as printed.

    Kept for documentation: it rejects (1,1,1), the restriction of the
    structure sheaf, so the catalogue uses the corrected form instead.
    """
    one = LaurentPoly.one(1)
    return _rel("P_n printed", {"x": one, "y": _m(-(n + 2)), "z": -(_m(-2) + _m(n))}, n, 2)


def surface_data(kind: SurfaceKind) -> SurfaceData:
    one = LaurentPoly.one(1)
    tag, n = kind.tag, kind.n
    if tag == "point":
        pts = ("x",)
        return SurfaceData(kind, pts, {"x": []}, {"x": LocalizedClass.of(1, 1)}, [], [("x", _tuple(pts, [1]))])
    if tag == "p1":
        pts = ("x", "y")
        w = {"x": [(2,)], "y": [(-2,)]}
        return SurfaceData(
            kind, pts, w, {p: _em([v[0] for v in w[p]]) for p in pts},
            [_two("x", "y", 2)],
            [("x", _tuple(pts, [1, 1])), ("y", _tuple(pts, [0, _one_minus(2)]))],
        )
    if tag == "pv":
        pts = ("x", "y", "z")
        w = {"x": [(2,), (4,)], "y": [(2,), (-2,)], "z": [(-2,), (-4,)]}
        rels = [
            _two("x", "y", 2),
            _two("y", "z", 2),
            _two("x", "z", 4),
            _rel("three-term", {"x": one, "y": -(_m(-2) * (one + _m(-2))), "z": _m(-6)}, 2, 4),
        ]
        basis = [
            ("x", _tuple(pts, [1, 1, 1])),
            ("y", _tuple(pts, [0, _one_minus(2), _one_minus(4)])),
            ("z", _tuple(pts, [0, 0, _one_minus(2) * _one_minus(4)])),
        ]
        return SurfaceData(kind, pts, w, {p: _em([v[0] for v in w[p]]) for p in pts}, rels, basis)
    if tag == "p1p1":
        pts = ("x", "y", "z", "w")
        w = {"x": [(2,), (2,)], "y": [(2,), (-2,)], "z": [(2,), (-2,)], "w": [(-2,), (-2,)]}
        rels = [
            _two("x", "y", 2),
            _two("x", "z", 2),
            _two("y", "w", 2),
            _two("z", "w", 2),
            _rel("four-term", {"x": one, "y": -_m(-2), "z": -_m(-2), "w": _m(-4)}, 2, 2),
        ]
        basis = [
            ("x", _tuple(pts, [1, 1, 1, 1])),
            ("y", _tuple(pts, [0, _one_minus(2), 0, _one_minus(2)])),
            ("z", _tuple(pts, [0, 0, _one_minus(2), _one_minus(2)])),
            ("w", _tuple(pts, [0, 0, 0, _one_minus(2) * _one_minus(2)])),
        ]
        return SurfaceData(kind, pts, w, {p: _em([v[0] for v in w[p]]) for p in pts}, rels, basis)
    fn_w = {"x": [(2,), (n,)], "y": [(-2,), (-n,)], "z": [(2,), (-n,)], "w": [(-2,), (n,)]}
    fn_em = {p: _em([v[0] for v in fn_w[p]]) for p in fn_w}
    if tag == "fn":
        pts = ("x", "y", "z", "w")
        rels = [
            _two("x", "y", 2),
            _two("z", "w", 2),
            _two("x", "z", n),
            _two("y", "w", n),
            # the sign of the f_w term is fixed by integrality of the ABBV sum
            _rel("four-term", {"x": one, "y": _m(-(n + 2)), "z": -_m(-n), "w": -_m(-2)}, 2, n),
        ]
        basis = [
            ("x", _tuple(pts, [1, 1, 1, 1])),
            ("y", _tuple(pts, [0, _one_minus(2), 0, _one_minus(2)])),
            ("z", _tuple(pts, [0, 0, _one_minus(n), -_m(-n) * _one_minus(n)])),
            ("w", _tuple(pts, [0, 0, 0, _one_minus(2) * _one_minus(n)])),
        ]
        return SurfaceData(kind, pts, fn_w, fn_em, rels, basis)
    if tag == "pn":
        pts = ("x", "y", "z")
        w = {"x": fn_w["x"], "y": fn_w["y"], "z": None}
        ems = {"x": fn_em["x"], "y": fn_em["y"], "z": fn_em["z"] + fn_em["w"]}
        rels = [
            _two("x", "z", n),
            _two("y", "z", n),
            _two("x", "y", 2),
            # F_n four-term relation with f_w = f_z
            _rel("three-term", {"x": one, "y": _m(-(n + 2)), "z": -(_m(-n) + _m(-2))}, n, 2),
        ]
        basis = [
            ("x", _tuple(pts, [1, 1, 1])),
            ("z", _tuple(pts, [0, _one_minus(2 * n), _one_minus(n)])),
            ("y", _tuple(pts, [0, _one_minus(2) * _one_minus(n), 0])),
        ]
        return SurfaceData(kind, pts, w, ems, rels, basis)
    if tag == "kn":
        pts = ("x", "y")
        w = {"x": None, "y": None}
        ems = {"x": fn_em["x"] + fn_em["z"], "y": fn_em["y"] + fn_em["w"]}
        return SurfaceData(
            kind, pts, w, ems,
            [_two("x", "y", 2)],
            [("x", _tuple(pts, [1, 1])), ("y", _tuple(pts, [0, _one_minus(2)]))],
        )
    raise ValueError(f"unknown surface kind {kind}")


def _check_keys(points: Sequence[str], f: Mapping[str, LaurentPoly]) -> None:
    missing = [p for p in points if p not in f]
    extra = [p for p in f if p not in points]
    if missing or extra:
        raise KeyError(f"tuple keys do not match fixed points (missing {missing}, extra {extra})")


def _even(f: LaurentPoly) -> bool:
    return all(all(x % 2 == 0 for x in e) for e in f.terms)


@dataclass
class RelationReport:
    ok: bool
    violations: list[tuple[CongruenceRelation, LaurentPoly | None]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def evaluate_relations(
    relations: Sequence[CongruenceRelation], f: Mapping[str, LaurentPoly], *, subring: bool = False
) -> RelationReport:
    bad = []
    if subring:
        for p, v in f.items():
            if not _even(v):
                bad.append((CongruenceRelation((), (), f"f_{p} not in the subring of even weights"), None))
    for r in relations:
        rem = r.evaluate(f)
        if rem is not None:
            bad.append((r, rem))
    return RelationReport(not bad, bad)


def check_relations(kind: SurfaceKind, f: Mapping[str, LaurentPoly], *, subring: bool = False) -> RelationReport:
    """Evaluate every congruence of the surface; subring=True also demands even exponents."""
    data = surface_data(kind)
    _check_keys(data.fixed_points, f)
    return evaluate_relations(data.relations, f, subring=subring)


def membership(kind: SurfaceKind, f: Mapping[str, LaurentPoly], *, subring: bool = False) -> list[LaurentPoly]:
    """Coefficients of f in the triangular basis of structure-sheaf restrictions.

    Entries are cleared one pivot at a time: the coefficient is the exact
    quotient of the residual pivot entry by the basis pivot entry.  Raises
    NotMember with the residual if a division fails or something is left.
    """
    data = surface_data(kind)
    _check_keys(data.fixed_points, f)
    if subring and not all(_even(v) for v in f.values()):
        raise NotMember(dict(f), None)
    r = dict(f)
    coeffs = []
    for pivot, b in data.basis:
        c = r[pivot].exact_div(b[pivot])
        if c is None:
            raise NotMember(r, pivot)
        coeffs.append(c)
        if not c.is_zero():
            r = {p: r[p] - c * b[p] for p in r}
    if any(not v.is_zero() for v in r.values()):
        raise NotMember(r, None)
    return coeffs


def abbv_sum(kind: SurfaceKind, f: Mapping[str, LaurentPoly]) -> LocalizedClass:
    data = surface_data(kind)
    total = LocalizedClass.of(0, 1)
    for p in data.fixed_points:
        total = total + data.multiplicities[p] * f[p]
    return total


# --------------------------------------------------------------------------
# skeletons
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Curve:
    p: str
    q: str
    weight: Vector


@dataclass(frozen=True)
class SurfaceComponent:
    kind: SurfaceKind
    root: Vector
    points: tuple[str, ...]


@dataclass
class SphericalSkeleton:
    rank: int
    points: list[str]
    curves: list[Curve] = field(default_factory=list)
    surfaces: list[SurfaceComponent] = field(default_factory=list)


def _substitute(f: LaurentPoly, root: Vector, kind: SurfaceKind) -> LaurentPoly:
    """e^{k t} -> e^{k chi / 2}."""
    out: dict[Vector, int] = {}
    for (k,), c in f.terms.items():
        out[_half_multiple(k, root, kind)] = c
    return LaurentPoly(len(root), out)


def _half_multiple(k: int, root: Vector, kind: SurfaceKind) -> Vector:
    if k % 2 == 0:
        return tuple(k // 2 * x for x in root)
    if any(x % 2 for x in root):
        raise HalfWeightNotIntegral(f"{kind} with root {list(root)} needs chi/2 in M")
    return tuple(k * (x // 2) for x in root)


def assemble_system(sk: SphericalSkeleton) -> list[CongruenceRelation]:
    rels: list[CongruenceRelation] = []
    one = LaurentPoly.one(sk.rank)
    for c in sk.curves:
        if not any(c.weight):
            raise ValueError("curve weight must be nonzero")
        rels.append(CongruenceRelation(((c.p, one), (c.q, -one)), (c.weight,), f"curve {c.p}-{c.q}"))
    for s in sk.surfaces:
        if not any(s.root):
            raise ValueError("root must be nonzero")
        data = surface_data(s.kind)
        if len(s.points) != len(data.fixed_points):
            raise ValueError(f"{s.kind} needs {len(data.fixed_points)} points, got {len(s.points)}")
        rename = dict(zip(data.fixed_points, s.points))
        for r in data.relations:
            coeffs = tuple((rename[p], _substitute(c, s.root, s.kind)) for p, c in r.coefficients)
            modulus = tuple(_half_multiple(m[0], s.root, s.kind) for m in r.modulus)
            rels.append(CongruenceRelation(coeffs, modulus, f"{s.kind} {r.name}"))
    for r in rels:
        for p, _ in r.coefficients:
            if p not in sk.points:
                raise KeyError(f"relation mentions unknown point {p!r}")
    return rels


def check_skeleton(sk: SphericalSkeleton, f: Mapping[str, LaurentPoly]) -> RelationReport:
    _check_keys(sk.points, f)
    return evaluate_relations(assemble_system(sk), f)


def parse_skeleton(text: str) -> SphericalSkeleton:
    """Lines: ``rank n`` (optional, default 1), ``point L``, ``curve P Q weight CHAR``,
    ``surface KIND root CHAR points L...``."""
    lines = []
    rank = 1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    for lineno, tok in lines:
        if tok[0] == "rank":
            rank = int(tok[1])
    sk = SphericalSkeleton(rank, [])
    for lineno, tok in lines:
        try:
            if tok[0] == "rank":
                continue
            if tok[0] == "point":
                sk.points.extend(tok[1:])
            elif tok[0] == "curve":
                if len(tok) < 5 or tok[3] != "weight":
                    raise ParseError("expected 'curve P Q weight CHAR'")
                sk.curves.append(Curve(tok[1], tok[2], parse_exponent("".join(tok[4:]), rank)))
            elif tok[0] == "surface":
                if len(tok) < 6 or tok[2] != "root" or "points" not in tok:
                    raise ParseError("expected 'surface KIND root CHAR points L...'")
                k = tok.index("points")
                sk.surfaces.append(
                    SurfaceComponent(SurfaceKind.parse(tok[1]), parse_exponent("".join(tok[3:k]), rank), tuple(tok[k + 1 :]))
                )
            else:
                raise ParseError(f"unknown keyword {tok[0]!r}")
        except (ParseError, ValueError) as err:
            raise ParseError(f"line {lineno}: {err}") from None
    if len(set(sk.points)) != len(sk.points):
        raise ParseError("duplicate point labels")
    return sk


_LABEL_LINE = re.compile(r"^(?:point\s+)?([A-Za-z_][A-Za-z_0-9']*)\s*:\s*(.+)$")


def parse_labelled_tuple(text: str, rank: int = 1, names: Sequence[str] | None = None) -> dict[str, LaurentPoly]:
    out: dict[str, LaurentPoly] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LABEL_LINE.match(line)
        if not m:
            raise ParseError(f"line {lineno}: expected '<label>: <expression>'")
        if m.group(1) in out:
            raise ParseError(f"line {lineno}: duplicate label {m.group(1)!r}")
        try:
            out[m.group(1)] = parse_laurent(m.group(2), rank, names)
        except ParseError as err:
            raise ParseError(f"line {lineno}: {err}") from None
    return out


# --------------------------------------------------------------------------
# brute-force oracle over an exponent window
# --------------------------------------------------------------------------


@dataclass
class WindowSystem:
    """Integer matrix sending basis coefficients (exponents in [-W, W]) to tuples."""

    kind: SurfaceKind
    bound: int
    width: int
    lo: int  # lowest tuple exponent represented
    hi: int
    matrix: "np.ndarray"

    def encode(self, f: Mapping[str, LaurentPoly]) -> "np.ndarray | None":
        pts = surface_data(self.kind).fixed_points
        span = self.hi - self.lo + 1
        v = np.zeros(len(pts) * span, dtype=np.int64)
        for i, p in enumerate(pts):
            for (e,), c in f[p].terms.items():
                if not self.lo <= e <= self.hi:
                    return None
                v[i * span + e - self.lo] = c
        return v


def window_system(kind: SurfaceKind, bound: int) -> WindowSystem:
    data = surface_data(kind)
    pts = data.fixed_points
    depth = 0
    for _, b in data.basis:
        depth += max((-min(e[0] for e in v.terms) for v in b.values() if v.terms), default=0)
    width = bound + depth
    lo, hi = -width - depth, width
    span = hi - lo + 1
    cols = []
    for _, b in data.basis:
        for s in range(-width, width + 1):
            col = np.zeros(len(pts) * span, dtype=np.int64)
            for i, p in enumerate(pts):
                for (e,), c in b[p].terms.items():
                    col[i * span + e + s - lo] = c
            cols.append(col)
    return WindowSystem(kind, bound, width, lo, hi, np.stack(cols, axis=1))


def window_membership(system: WindowSystem, tuples: Sequence[Mapping[str, LaurentPoly]], backend: str | None = None) -> "np.ndarray":
    """Decide membership by solving the window system.

    A least-squares solve proposes integer coefficients; the exact int64
    product M @ c == f is the certificate, so a True is always exact.  The
    window is wide enough that every member has its coefficients inside it.
    """
    F = np.stack([system.encode(f) for f in tuples])
    A = system.matrix.astype(np.float64)
    sol, *_ = np.linalg.lstsq(A, F.T.astype(np.float64), rcond=None)
    C = np.rint(sol.T).astype(np.int64)
    return kernels.matvec_check(system.matrix, C, F, backend=backend)


def sample_tuples(
    kind: SurfaceKind, count: int, bound: int, rng: "np.random.Generator", coeff: int = 2
) -> list[dict[str, LaurentPoly]]:
    """Tuples with exponents in [-bound, bound] and coefficients in [-coeff, coeff].

    Roughly a third are basis combinations, a third are members with one
    coefficient perturbed, and a third are sparse random tuples.
    """
    data = surface_data(kind)
    pts = data.fixed_points
    out: list[dict[str, LaurentPoly]] = []

    def fits(f):
        return all(
            -bound <= e[0] <= bound and -coeff <= c <= coeff for v in f.values() for e, c in v.terms.items()
        )

    def random_poly(terms: int, lo: int, hi: int) -> LaurentPoly:
        d = {}
        for _ in range(terms):
            d[(int(rng.integers(lo, hi + 1)),)] = int(rng.choice([-2, -1, 1, 2]))
        return LaurentPoly(1, d)

    def member() -> dict[str, LaurentPoly]:
        while True:
            f = {p: LaurentPoly.zero(1) for p in pts}
            for _, b in data.basis:
                if rng.random() < 0.6:
                    c = random_poly(int(rng.integers(1, 3)), -bound // 2, bound // 2)
                    f = {p: f[p] + c * b[p] for p in pts}
            if fits(f):
                return f

    while len(out) < count:
        r = rng.random()
        if r < 1 / 3:
            out.append(member())
        elif r < 2 / 3:
            f = member()
            p = pts[int(rng.integers(len(pts)))]
            e = int(rng.integers(-bound, bound + 1))
            g = dict(f)
            g[p] = f[p] + LaurentPoly.monomial((e,), int(rng.choice([-1, 1])))
            if fits(g):
                out.append(g)
        else:
            f = {p: random_poly(int(rng.integers(0, 4)), -bound, bound) for p in pts}
            if fits(f):
                out.append(f)
    return out
