"""Rational polyhedral fans: validation, faces, walls, resolutions, divisors.

Cones are stored as sorted tuples of indices into the fan's ray list.  All
geometry is exact; the only floating point anywhere is absent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .lattice import (
    Vector,
    det,
    dot,
    inverse_unimodular,
    kernel,
    normalize_sign,
    primitive,
    rank,
    saturated_span,
    solve,
    vgcd,
)


class FanError(ValueError):
    """Base class for invalid fan data."""


class FanParseError(FanError):
    pass


class RankMismatchError(FanError):
    pass


class NonPrimitiveRay(FanError):
    pass


class NonPointedCone(FanError):
    pass


class NonExtremalRay(FanError):
    pass


class OverlappingCones(FanError):
    pass


class FanNotComplete(FanError):
    pass


class NotSimplicial(ValueError):
    pass


class NotSmooth(ValueError):
    pass


class NotCartier(ValueError):
    pass


class UnboundedPolytope(ValueError):
    pass


# --------------------------------------------------------------------------
# cone geometry on bare vectors
# --------------------------------------------------------------------------


def _kernel_any(vectors: Sequence[Sequence[int]], n: int) -> list[Vector]:
    if not vectors:
        return kernel([], n)
    return kernel([list(v) for v in vectors], n)


def facets(vectors: Sequence[Sequence[int]]) -> list[frozenset[int]]:
    """Facets of cone(vectors) as sets of generator positions lying on them.

    Works for pointed and non-pointed cones and for redundant generators:
    every facet contains dim-1 independent generators, so trying each such
    subset as a hyperplane candidate finds all of them.
    """
    vs = [tuple(v) for v in vectors]
    if not vs:
        return []
    n = len(vs[0])
    d = rank(vs)
    if d == 0:
        return []
    found: set[frozenset[int]] = set()
    for sub in combinations(range(len(vs)), d - 1):
        subv = [vs[i] for i in sub]
        if (rank(subv) if subv else 0) != d - 1:
            continue
        normal = None
        for m in _kernel_any(subv, n):
            vals = [dot(m, v) for v in vs]
            if any(vals):
                normal = vals
                break
        if normal is None:
            continue
        if all(x >= 0 for x in normal) or all(x <= 0 for x in normal):
            found.add(frozenset(i for i, x in enumerate(normal) if x == 0))
    return sorted(found, key=lambda s: sorted(s))


def faces(vectors: Sequence[Sequence[int]]) -> list[frozenset[int]]:
    """All faces of a cone (including the cone and its minimal face) as position sets."""
    full = frozenset(range(len(vectors)))
    fs = set(facets(vectors))
    out = {full} | fs
    frontier = set(fs)
    while frontier:
        new = set()
        for a in frontier:
            for b in fs:
                c = a & b
                if c not in out:
                    new.add(c)
        out |= new
        frontier = new
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def is_pointed(vectors: Sequence[Sequence[int]]) -> bool:
    if not vectors:
        return True
    fs = facets(vectors)
    if not fs:
        return False
    common = frozenset(range(len(vectors)))
    for f in fs:
        common &= f
    return not common


def cone_dim(vectors: Sequence[Sequence[int]]) -> int:
    return rank([list(v) for v in vectors]) if vectors else 0


def simplex_multiplicity(vectors: Sequence[Sequence[int]]) -> int:
    """Index of the sublattice spanned by independent vectors in its saturation."""
    k = len(vectors)
    if k == 0:
        return 1
    n = len(vectors[0])
    g = 0
    for cols in combinations(range(n), k):
        g = math.gcd(g, det([[v[c] for c in cols] for v in vectors]))
    if g == 0:
        raise NotSimplicial("generators are linearly dependent")
    return g


def parallelepiped_points(vectors: Sequence[Sequence[int]]) -> list[tuple[Vector, tuple[Fraction, ...]]]:
    """Lattice points of {sum a_i v_i : 0 <= a_i < 1} with their coefficients.

    The point set has exactly multiplicity-many elements; the origin is first.
    """
    vs = [tuple(v) for v in vectors]
    k = len(vs)
    if k == 0:
        return [((), ())]
    n = len(vs[0])
    m = simplex_multiplicity(vs)
    out = []
    for b in product(range(m), repeat=k):
        s = [sum(bi * v[c] for bi, v in zip(b, vs)) for c in range(n)]
        if all(x % m == 0 for x in s):
            out.append((tuple(x // m for x in s), tuple(Fraction(bi, m) for bi in b)))
    assert len(out) == m
    return out


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Cone:
    """A cone of a fan: sorted ray indices plus the ray vectors in that order."""

    index: tuple[int, ...]
    rays: tuple[Vector, ...]

    @property
    def dim(self) -> int:
        return cone_dim(self.rays)

    def __len__(self) -> int:
        return len(self.index)

    def contains_face(self, other: "Cone") -> bool:
        return set(other.index) <= set(self.index)


@dataclass(frozen=True)
class TDivisor:
    name: str
    coefficients: tuple[int, ...]


@dataclass(frozen=True)
class Wall:
    cone: Cone
    left: int  # position of a maximal cone in fan.maximal
    right: int
    weight: Vector


@dataclass
class Polytope:
    """{m : <m, normal_i> >= -offset_i}; vertices are exact rationals."""

    normals: list[Vector]
    offsets: list[int]
    vertices: list[tuple[Fraction, ...]]

    def contains(self, m: Sequence[int]) -> bool:
        return all(dot(m, v) >= -a for v, a in zip(self.normals, self.offsets))


class Fan:
    """A fan in N = Z^rank given by rays and maximal cones."""

    def __init__(
        self,
        rank_: int,
        rays: Sequence[Sequence[int]],
        maximal: Sequence[Sequence[int]],
        divisors: Iterable[TDivisor] = (),
        *,
        validate: bool = True,
    ):
        self.rank = rank_
        self.rays: list[Vector] = [tuple(int(x) for x in r) for r in rays]
        self.maximal_index: list[tuple[int, ...]] = [tuple(sorted(set(c))) for c in maximal]
        self.divisors: dict[str, TDivisor] = {d.name: d for d in divisors}
        self._faces: dict[tuple[int, ...], Cone] | None = None
        self._complete: bool | None = None
        if validate:
            self.validate()

    # -- construction ------------------------------------------------------

    def cone(self, index: Iterable[int]) -> Cone:
        idx = tuple(sorted(set(index)))
        return Cone(idx, tuple(self.rays[i] for i in idx))

    @property
    def maximal(self) -> list[Cone]:
        return [self.cone(c) for c in self.maximal_index]

    def validate(self) -> None:
        n = self.rank
        for i, r in enumerate(self.rays):
            if len(r) != n:
                raise RankMismatchError(f"ray {i} has {len(r)} coordinates, expected {n}")
            g = vgcd(r)
            if g == 0:
                raise NonPrimitiveRay(f"ray {i} is zero")
            if g != 1:
                raise NonPrimitiveRay(f"ray {i} = {r} is not primitive (gcd {g})")
        if len(set(self.rays)) != len(self.rays):
            raise FanError("duplicate rays")
        for k, c in enumerate(self.maximal_index):
            for i in c:
                if not 0 <= i < len(self.rays):
                    raise FanParseError(f"cone {k} references unknown ray {i}")
            vs = [self.rays[i] for i in c]
            if not is_pointed(vs):
                raise NonPointedCone(f"cone {k} = {list(c)} is not strictly convex")
            fs = faces(vs)
            for pos in range(len(vs)):
                if frozenset([pos]) not in fs:
                    raise NonExtremalRay(f"ray {c[pos]} is not an extremal ray of cone {k}")
        for a, b in combinations(range(len(self.maximal_index)), 2):
            if not self._meet_in_common_face(self.maximal_index[a], self.maximal_index[b]):
                raise OverlappingCones(
                    f"cones {a} = {list(self.maximal_index[a])} and {b} = {list(self.maximal_index[b])} "
                    "do not intersect in a common face"
                )

    def _meet_in_common_face(self, a: tuple[int, ...], b: tuple[int, ...]) -> bool:
        common = set(a) & set(b)
        gens = [self.rays[i] for i in a] + [tuple(-x for x in self.rays[i]) for i in b]
        labels = [("a", i) for i in a] + [("b", i) for i in b]
        target = {k for k, (_, i) in enumerate(labels) if i in common}
        containing = [f for f in facets(gens) if target <= f]
        face = set(range(len(gens)))
        for f in containing:
            face &= f
        return face <= target

    # -- faces -------------------------------------------------------------

    def _build_faces(self) -> dict[tuple[int, ...], Cone]:
        out: dict[tuple[int, ...], Cone] = {}
        for c in self.maximal_index:
            vs = [self.rays[i] for i in c]
            for f in faces(vs):
                idx = tuple(sorted(c[p] for p in f))
                out.setdefault(idx, self.cone(idx))
        if not self.maximal_index:
            out[()] = self.cone(())
        return out

    @property
    def cones(self) -> list[Cone]:
        """Every cone, ordered by (dimension, ray indices); the zero cone has id 0."""
        if self._faces is None:
            self._faces = self._build_faces()
        return sorted(self._faces.values(), key=lambda c: (c.dim, c.index))

    def cone_id(self, cone: Cone | Sequence[int]) -> int:
        idx = cone.index if isinstance(cone, Cone) else tuple(sorted(cone))
        for k, c in enumerate(self.cones):
            if c.index == idx:
                return k
        raise KeyError(f"cone {list(idx)} is not in the fan")

    def has_cone(self, index: Sequence[int]) -> bool:
        if self._faces is None:
            self._faces = self._build_faces()
        return tuple(sorted(index)) in self._faces

    def star(self, tau: Cone) -> list[int]:
        """Positions of maximal cones containing tau."""
        return [k for k, c in enumerate(self.maximal_index) if set(tau.index) <= set(c)]

    @property
    def complete(self) -> bool:
        if self._complete is None:
            self._complete = self._check_complete()
        return self._complete

    def _check_complete(self) -> bool:
        n = self.rank
        if not self.maximal_index:
            return n == 0
        counts: dict[tuple[int, ...], int] = {}
        for c in self.maximal_index:
            vs = [self.rays[i] for i in c]
            if cone_dim(vs) != n:
                return False
            for f in facets(vs):
                idx = tuple(sorted(c[p] for p in f))
                counts[idx] = counts.get(idx, 0) + 1
        return all(v == 2 for v in counts.values())

    def is_simplicial(self) -> bool:
        return all(is_simplicial(c) for c in self.maximal)

    def is_smooth(self) -> bool:
        return all(is_smooth(c) for c in self.maximal)

    def __repr__(self) -> str:
        return f"Fan(rank={self.rank}, rays={len(self.rays)}, maximal={len(self.maximal_index)})"


# --------------------------------------------------------------------------
# cone predicates
# --------------------------------------------------------------------------


def is_simplicial(c: Cone) -> bool:
    return c.dim == len(c.rays)


def multiplicity(c: Cone) -> int:
    if not is_simplicial(c):
        raise NotSimplicial(f"cone {list(c.index)} is not simplicial")
    return simplex_multiplicity(c.rays)


def is_smooth(c: Cone) -> bool:
    return is_simplicial(c) and multiplicity(c) == 1


def dual_generators(c: Cone) -> list[Vector]:
    """Basis of M dual to the rays of a smooth full-dimensional cone."""
    if not c.rays or len(c.rays) != len(c.rays[0]):
        raise NotSmooth(f"cone {list(c.index)} is not full-dimensional simplicial")
    n = len(c.rays)
    if abs(det(c.rays)) != 1:
        raise NotSmooth(f"cone {list(c.index)} is not smooth")
    inv = inverse_unimodular([list(r) for r in c.rays])  # columns are the dual basis
    return [tuple(inv[i][j] for i in range(n)) for j in range(n)]


def dual_cone_generators(c: Cone) -> list[Vector]:
    """Primitive generators of the dual of a full-dimensional simplicial cone.

    The i-th generator pairs to zero with every ray except the i-th.
    """
    n = len(c.rays[0]) if c.rays else 0
    if len(c.rays) != n or c.dim != n:
        raise NotSimplicial("dual generators need a full-dimensional simplicial cone")
    out = []
    for i in range(n):
        others = [c.rays[j] for j in range(n) if j != i]
        (m,) = _kernel_any(others, n)
        if dot(m, c.rays[i]) < 0:
            m = tuple(-x for x in m)
        out.append(primitive(m))
    return out


def tangent_weights(c: Cone) -> list[Vector]:
    """Tangent weights at the fixed point of a smooth maximal cone (negated dual basis)."""
    return [tuple(-x for x in m) for m in dual_generators(c)]


def face_weight(tau: Cone, n: int) -> Vector:
    """Primitive generator of tau^perp for a codimension-one cone, sign-normalized."""
    ker = _kernel_any(tau.rays, n)
    if len(ker) != 1:
        raise ValueError("cone is not of codimension one")
    return normalize_sign(primitive(ker[0]))


def walls(fan: Fan) -> list[Wall]:
    n = fan.rank
    owners: dict[tuple[int, ...], list[int]] = {}
    for k, c in enumerate(fan.maximal_index):
        vs = [fan.rays[i] for i in c]
        if cone_dim(vs) != n:
            raise FanNotComplete(f"maximal cone {k} is not full-dimensional")
        for f in facets(vs):
            owners.setdefault(tuple(sorted(c[p] for p in f)), []).append(k)
    out = []
    for idx in sorted(owners):
        ks = owners[idx]
        if len(ks) != 2:
            raise FanNotComplete(f"facet {list(idx)} lies in {len(ks)} maximal cone(s)")
        tau = fan.cone(idx)
        out.append(Wall(tau, ks[0], ks[1], face_weight(tau, n)))
    return out


def quotient_map(tau: Cone, n: int) -> list[Vector]:
    """Rows of the map M -> M/(tau^perp cap M) = Hom(N_tau, Z).

    Uses a basis of the saturated lattice spanned by tau's rays, so the
    kernel is exactly tau^perp cap M.
    """
    return saturated_span(tau.rays, n)


# --------------------------------------------------------------------------
# stellar subdivision and resolution
# --------------------------------------------------------------------------


PIVOT_POLICIES = ("min-height", "first-lex")


@dataclass
class StellarStep:
    new_ray: Vector
    subdivided: list[tuple[tuple[int, ...], int, list[int]]]  # (cone, mult, children mults)


@dataclass
class Resolution:
    fan: Fan
    fiber: list[int]  # new maximal cone position -> original maximal cone position
    steps: list[StellarStep] = field(default_factory=list)

    def over(self, k: int) -> list[int]:
        return [i for i, j in enumerate(self.fiber) if j == k]


def _coefficients(point: Sequence[int], rays: Sequence[Vector]) -> list[Fraction] | None:
    a = [[r[c] for r in rays] for c in range(len(point))]
    return solve(a, list(point))


def _pick_pivot(fan: Fan, policy: str) -> tuple[int, Vector] | None:
    mults = []
    for k, c in enumerate(fan.maximal):
        m = multiplicity(c)
        if m > 1:
            mults.append((m, k))
    if not mults:
        return None
    if policy == "min-height":
        worst = max(m for m, _ in mults)
        k = min(k for m, k in mults if m == worst)
        pts = [(sum(a), p) for p, a in parallelepiped_points(fan.maximal[k].rays) if any(p)]
        _, p = min(pts)
    elif policy == "first-lex":
        k = min(k for _, k in mults)
        pts = [p for p, _ in parallelepiped_points(fan.maximal[k].rays) if any(p)]
        p = max(pts)
    else:
        raise ValueError(f"unknown pivot policy {policy!r}")
    return k, primitive(p)


def stellar_subdivide(fan: Fan, w: Vector, fiber: list[int] | None = None) -> tuple[Fan, list[int], StellarStep]:
    """Insert ray w into a simplicial fan, splitting every cone that contains it."""
    rays = list(fan.rays) + [tuple(w)]
    new = len(rays) - 1
    maximal: list[tuple[int, ...]] = []
    new_fiber: list[int] = []
    fiber = fiber if fiber is not None else list(range(len(fan.maximal_index)))
    step = StellarStep(tuple(w), [])
    for k, c in enumerate(fan.maximal_index):
        vs = [fan.rays[i] for i in c]
        coeffs = _coefficients(w, vs) if cone_dim(vs) == len(vs) else None
        if coeffs is None or any(a < 0 for a in coeffs):
            maximal.append(c)
            new_fiber.append(fiber[k])
            continue
        children = []
        for pos, a in enumerate(coeffs):
            if a > 0:
                child = tuple(sorted([i for i in c if i != c[pos]] + [new]))
                maximal.append(child)
                new_fiber.append(fiber[k])
                children.append(simplex_multiplicity([rays[i] for i in child]))
        step.subdivided.append((c, simplex_multiplicity(vs), children))
    out = Fan(fan.rank, rays, maximal, fan.divisors.values(), validate=False)
    return out, new_fiber, step


def resolve(fan: Fan, policy: str = "min-height") -> Resolution:
    """Smooth refinement by repeated stellar subdivision.

    Non-simplicial input is triangulated first.  ``fiber`` maps each maximal
    cone of the result to the original maximal cone containing it.
    """
    if policy not in PIVOT_POLICIES:
        raise ValueError(f"unknown pivot policy {policy!r}")
    fiber = list(range(len(fan.maximal_index)))
    current = fan
    if not fan.is_simplicial():
        current, fiber = _triangulate_with_fiber(fan)
    steps = []
    while True:
        pick = _pick_pivot(current, policy)
        if pick is None:
            break
        _, w = pick
        current, fiber, step = stellar_subdivide(current, w, fiber)
        steps.append(step)
    return Resolution(current, fiber, steps)


def resolve_cone(rank_: int, rays: Sequence[Vector], policy: str = "min-height") -> Resolution:
    """Resolve the fan consisting of one cone and its faces."""
    f = Fan(rank_, rays, [tuple(range(len(rays)))], validate=False)
    return resolve(f, policy)


def _pulling(fan: Fan, idx: tuple[int, ...]) -> list[tuple[int, ...]]:
    vs = [fan.rays[i] for i in idx]
    d = cone_dim(vs)
    if d == len(idx):
        return [idx]
    v = min(idx)
    out = []
    for f in facets(vs):
        face = tuple(sorted(idx[p] for p in f))
        if v in face:
            continue
        for simplex in _pulling(fan, face):
            out.append(tuple(sorted(simplex + (v,))))
    return out


def _triangulate_with_fiber(fan: Fan) -> tuple[Fan, list[int]]:
    maximal, fiber = [], []
    for k, c in enumerate(fan.maximal_index):
        for s in _pulling(fan, c):
            maximal.append(s)
            fiber.append(k)
    return Fan(fan.rank, fan.rays, maximal, fan.divisors.values(), validate=False), fiber


def stellar_triangulate(fan: Fan) -> Fan:
    """Simplicial refinement using only existing rays (pulling, lowest ray index first)."""
    if fan.is_simplicial():
        return fan
    return _triangulate_with_fiber(fan)[0]


# --------------------------------------------------------------------------
# T-divisors and their polytopes
# --------------------------------------------------------------------------


def divisor_vertex(fan: Fan, D: TDivisor, sigma: Cone) -> Vector:
    """The character m with <m, v_rho> = -a_rho on the rays of sigma."""
    rows = [list(fan.rays[i]) for i in sigma.index]
    rhs = [-D.coefficients[i] for i in sigma.index]
    x = solve(rows, rhs)
    if x is None or (rows and rank(rows) != fan.rank):
        raise NotCartier(f"{D.name} is not Cartier on cone {list(sigma.index)}")
    if any(v.denominator != 1 for v in x):
        raise NotCartier(f"{D.name} is only Q-Cartier on cone {list(sigma.index)}")
    return tuple(int(v) for v in x)


def is_cartier(fan: Fan, D: TDivisor) -> bool:
    try:
        for c in fan.maximal:
            divisor_vertex(fan, D, c)
    except NotCartier:
        return False
    return True


def is_nef(fan: Fan, D: TDivisor) -> bool:
    """Cartier and every local vertex lies in the polytope (convex support function)."""
    if not is_cartier(fan, D):
        return False
    for c in fan.maximal:
        m = divisor_vertex(fan, D, c)
        if any(dot(m, v) < -a for v, a in zip(fan.rays, D.coefficients)):
            return False
    return True


def divisor_polytope(fan: Fan, D: TDivisor) -> Polytope:
    if len(D.coefficients) != len(fan.rays):
        raise ValueError(f"divisor {D.name} has {len(D.coefficients)} coefficients for {len(fan.rays)} rays")
    if not fan.complete:
        raise UnboundedPolytope("divisor polytopes are bounded only on complete fans")
    n = fan.rank
    verts = set()
    for sub in combinations(range(len(fan.rays)), n):
        rows = [list(fan.rays[i]) for i in sub]
        if det(rows) == 0:
            continue
        x = solve(rows, [-D.coefficients[i] for i in sub])
        if x is None:
            continue
        if all(dot(x, v) >= -a for v, a in zip(fan.rays, D.coefficients)):
            verts.add(tuple(x))
    return Polytope(list(fan.rays), list(D.coefficients), sorted(verts))


def lattice_points(poly: Polytope, backend: str | None = None) -> list[Vector]:
    """Integer points of a bounded polytope by box enumeration and membership."""
    if not poly.vertices:
        return []
    n = len(poly.vertices[0])
    lo = [math.floor(min(v[i] for v in poly.vertices)) for i in range(n)]
    hi = [math.ceil(max(v[i] for v in poly.vertices)) for i in range(n)]
    pts = kernels.box_points(
        np.array(poly.normals, dtype=np.int64),
        -np.array(poly.offsets, dtype=np.int64),
        lo,
        hi,
        backend=backend,
    )
    return [tuple(int(x) for x in p) for p in pts]


# --------------------------------------------------------------------------
# file format
# --------------------------------------------------------------------------


def parse_fan(text: str) -> Fan:
    """Parse the line-oriented fan format (``rank``, ``ray``, ``cone``, ``divisor``)."""
    n = None
    rays: list[Vector] = []
    cones: list[tuple[int, ...]] = []
    divs: list[tuple[str, list[int], int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "rank":
                if n is not None or len(rest) != 1:
                    raise FanParseError(f"line {lineno}: duplicate or malformed rank")
                n = int(rest[0])
                if n < 0:
                    raise FanParseError(f"line {lineno}: negative rank")
            elif key == "ray":
                if n is None:
                    raise FanParseError(f"line {lineno}: ray before rank")
                v = tuple(int(x) for x in rest)
                if len(v) != n:
                    raise RankMismatchError(f"line {lineno}: ray has {len(v)} coordinates, rank is {n}")
                rays.append(v)
            elif key == "cone":
                cones.append(tuple(int(x) for x in rest))
            elif key == "divisor":
                if not rest:
                    raise FanParseError(f"line {lineno}: divisor needs a name")
                divs.append((rest[0], [int(x) for x in rest[1:]], lineno))
            else:
                raise FanParseError(f"line {lineno}: unknown keyword {key!r}")
        except ValueError as err:
            if isinstance(err, FanError):
                raise
            raise FanParseError(f"line {lineno}: {err}") from None
    if n is None:
        raise FanParseError("missing rank line")
    divisors = []
    for name, coeffs, lineno in divs:
        if len(coeffs) != len(rays):
            raise FanParseError(f"line {lineno}: divisor {name} has {len(coeffs)} coefficients for {len(rays)} rays")
        divisors.append(TDivisor(name, tuple(coeffs)))
    return Fan(n, rays, cones, divisors)


def load_fan(path: str) -> Fan:
    with open(path, encoding="utf-8") as fh:
        return parse_fan(fh.read())


def format_fan(fan: Fan) -> str:
    lines = [f"rank {fan.rank}"]
    lines += ["ray " + " ".join(str(x) for x in r) for r in fan.rays]
    lines += ["cone " + " ".join(str(i) for i in c) for c in fan.maximal_index]
    lines += [f"divisor {d.name} " + " ".join(str(a) for a in d.coefficients) for d in fan.divisors.values()]
    return "\n".join(lines) + "\n"
