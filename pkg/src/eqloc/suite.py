"""Regression suite run by ``eqloc corpus``.

Each criterion returns a CriterionResult with a one-line detail.  The
printed values for the weighted projective plane P(1,1,2) are stored here
as text in the charring syntax and parsed at run time.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .charring import LaurentPoly, LocalizedClass, adams, bott, parse_exponent, parse_laurent
from .corpus import CorpusEntry, corpus
from .fan import PIVOT_POLICIES, Fan, is_simplicial, is_smooth
from .localize import brion_oracle, dual_basis, euler_char
from .multiplicity import em_cone, em_orbit_closure, em_point
from .rr import verify_adams_rr_point, verify_grr_pushforward, verify_todd_identity
from .spherical import (
    SurfaceKind,
    NotMember,
    check_relations,
    membership,
    sample_tuples,
    surface_data,
    window_membership,
    window_system,
)

P112 = Fan(2, [(1, 0), (0, 1), (-1, -2)], [(0, 1), (0, 2), (1, 2)])
P112_BASIS = [(), (2,), (0, 2)]  # X, the divisor of the ray -e1-2e2, the singular point

# rows X, D, p; columns are the maximal cones {0,1}, {0,2}, {1,2}
P112_FIGURE = [
    [("1", ["u1", "u2"]), ("1 + e^{u1-u2}", ["2*u1-u2", "-u2"]), ("1", ["-u1", "-2*u1+u2"])],
    [("0", []), ("1", ["2*u1-u2"]), ("1", ["-2*u1+u2"])],
    [("0", []), ("1", []), ("0", [])],
]

P112_IMAGE = [
    ["1 - e^{u1} - e^{u2} + e^{u1+u2}", "e^{u1} - e^{u1+u2}", "e^{u2}"],
    ["e^{u1} - e^{u1+u2}", "e^{-u1+u2} + e^{u1+u2} + e^{u2} - e^{u1}", "-e^{u2} - e^{-u1+u2}"],
    ["e^{u2}", "-e^{u2} - e^{-u1+u2}", "e^{-u1+u2}"],
]
P112_DETERMINANT = "e^{-u1+2*u2} + e^{u2}"

ADAMS_J = (1, 2, 3, 5)
SPHERICAL_KINDS = ("pv", "p1p1", "fn:1", "fn:2", "fn:3")


@dataclass
class CriterionResult:
    number: int
    title: str
    ok: bool
    detail: str
    seconds: float = 0.0
    limit: float | None = None
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.ok and (self.limit is None or self.seconds < self.limit)


def _timed(number: int, title: str, limit: float | None, fn: Callable[[], tuple[bool, str, list[str]]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail, failures = fn()
    return CriterionResult(number, title, ok, detail, time.perf_counter() - t0, limit, failures)


def _figure_entry(num: str, den: list[str]) -> LocalizedClass:
    return LocalizedClass(parse_laurent(num, 2), [tuple(-x for x in parse_exponent(d, 2)) for d in den])


def figure_table() -> list[list[LocalizedClass]]:
    return [[_figure_entry(n, d) for n, d in row] for row in P112_FIGURE]


def criterion_1() -> tuple[bool, str, list[str]]:
    expected = figure_table()
    bad = []
    for r, idx in enumerate(P112_BASIS):
        got = em_orbit_closure(P112, P112.cone(idx))
        for c, (x, y) in enumerate(zip(got, expected[r])):
            if x != y:
                bad.append(f"row {'XDp'[r]} cone {list(P112.maximal_index[c])}: {x} != {y}")
    return not bad, f"{9 - len(bad)}/9 entries equal", bad


def criterion_2() -> tuple[bool, str, list[str]]:
    db = dual_basis(P112, [P112.cone(i) for i in P112_BASIS])
    bad = []
    for i in range(3):
        for j in range(3):
            if db.image[i][j] != parse_laurent(P112_IMAGE[i][j], 2):
                bad.append(f"image[{i}][{j}] = {db.image[i][j]}")
    det = parse_laurent(P112_DETERMINANT, 2)
    if db.determinant_up_to_sign != det:
        bad.append(f"determinant {db.determinant}")
    sign = "+" if db.determinant == det else "-"
    return not bad, f"images equal, determinant equal up to the unit {sign}1", bad


def _fans() -> tuple[CorpusEntry, ...]:
    return corpus()


def _per_fan(entry: CorpusEntry, what: str) -> list[str]:
    """Failures of one check on one corpus fan (picklable unit of work)."""
    fan = entry.fan
    bad: list[str] = []
    if what == "brion":
        for D in entry.divisors:
            if euler_char(fan, D) != brion_oracle(fan, D):
                bad.append(f"{entry.name} {D.name}")
    elif what == "sum":
        total = LocalizedClass.of(0, fan.rank)
        for c in fan.maximal:
            total = total + em_point(fan, c)
        if total != LocalizedClass.of(1, fan.rank):
            bad.append(f"{entry.name}: sum is {total}")
    elif what == "todd":
        for c in fan.maximal:
            if not verify_todd_identity(fan, c, 10).ok:
                bad.append(f"{entry.name} cone {list(c.index)}")
    elif what == "adams":
        for c in fan.maximal:
            for j in ADAMS_J:
                if not verify_adams_rr_point(fan, c, j).ok:
                    bad.append(f"{entry.name} cone {list(c.index)} j={j}")
    elif what == "grr":
        if fan.is_smooth():
            for D in entry.divisors:
                if not verify_grr_pushforward(fan, D, 8).ok:
                    bad.append(f"{entry.name} {D.name}")
    elif what == "policy":
        for c in fan.maximal:
            if is_smooth(c):
                continue
            vals = [em_cone(fan.rank, c.rays, p) for p in PIVOT_POLICIES]
            if any(v != vals[0] for v in vals[1:]):
                bad.append(f"{entry.name} cone {list(c.index)}")
    else:
        raise ValueError(what)
    return bad


def _over_corpus(what: str, jobs: int) -> list[str]:
    fans = _fans()
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            parts = list(ex.map(_per_fan, fans, [what] * len(fans)))
    else:
        parts = [_per_fan(e, what) for e in fans]
    return [x for p in parts for x in p]


def criterion_3(jobs: int = 1):
    fans = _fans()
    ok_shape = len(fans) >= 20 and all(len(e.divisors) >= 4 and e.fan.rank <= 3 for e in fans)
    bad = _over_corpus("brion", jobs)
    n = sum(len(e.divisors) for e in fans)
    return ok_shape and not bad, f"{len(fans)} fans, {n - len(bad)}/{n} divisors agree", bad


def criterion_4(jobs: int = 1):
    bad = _over_corpus("sum", jobs)
    return not bad, f"{len(_fans()) - len(bad)}/{len(_fans())} fans sum to 1", bad


def criterion_5(jobs: int = 1):
    bad = _over_corpus("todd", jobs)
    n = sum(len(e.fan.maximal_index) for e in _fans())
    sing = sum(1 for e in _fans() for c in e.fan.maximal if not is_smooth(c) and is_simplicial(c))
    return not bad, f"{n - len(bad)}/{n} fixed points ({sing} singular simplicial)", bad


def adams_properties(count: int = 1000, seed: int = 0) -> list[str]:
    """theta^j(n) = j^n and psi^j psi^k = psi^{jk} on random inputs."""
    rng = np.random.default_rng(seed)
    bad = []
    for trial in range(count):
        rank = int(rng.integers(1, 4))
        j, k = (int(x) for x in rng.integers(1, 7, size=2))
        n = int(rng.integers(0, 5))
        weights = []
        while len(weights) < n:
            w = tuple(int(x) for x in rng.integers(-3, 4, size=rank))
            if any(w):
                weights.append((w, 1))
        th = bott(j, weights, rank)
        if not th.is_laurent() or th.to_laurent().augmentation() != j**n:
            bad.append(f"theta trial {trial}")
        terms = {tuple(int(x) for x in rng.integers(-4, 5, size=rank)): int(rng.integers(-3, 4)) for _ in range(int(rng.integers(0, 6)))}
        f = LaurentPoly(rank, terms)
        if adams(j, adams(k, f)) != adams(j * k, f):
            bad.append(f"psi trial {trial}")
    return bad


def criterion_6(jobs: int = 1):
    bad = _over_corpus("adams", jobs)
    props = adams_properties()
    n = sum(len(e.fan.maximal_index) for e in _fans()) * len(ADAMS_J)
    return not bad and not props, f"{n - len(bad)}/{n} point checks, {2000 - len(props)}/2000 property checks", bad + props


def criterion_7(jobs: int = 1):
    bad = _over_corpus("grr", jobs)
    fans = [e for e in _fans() if e.fan.is_smooth()]
    n = sum(len(e.divisors) for e in fans)
    return not bad, f"{len(fans)} smooth fans, {n - len(bad)}/{n} divisors to degree 8", bad


def spherical_equivalence(kind: SurfaceKind, count: int, bound: int = 8, seed: int = 0) -> tuple[int, list[str]]:
    """Compare membership, check_relations and the window oracle on sampled tuples."""
    rng = np.random.default_rng(seed)
    tuples = sample_tuples(kind, count, bound, rng)
    oracle = window_membership(window_system(kind, bound), tuples)
    bad = []
    members = 0
    for i, f in enumerate(tuples):
        rel = check_relations(kind, f).ok
        try:
            membership(kind, f)
            mem = True
        except NotMember:
            mem = False
        members += mem
        if not rel == mem == bool(oracle[i]):
            bad.append(f"{kind} tuple {i}: relations={rel} membership={mem} oracle={bool(oracle[i])}")
    return members, bad


def criterion_8(count: int = 10_000):
    bad = []
    pv = SurfaceKind("pv")
    for _, b in surface_data(pv).basis:
        if not check_relations(pv, b).ok:
            bad.append("pv basis triple")
    remark = {"x": LaurentPoly.zero(1), "y": LaurentPoly.zero(1), "z": parse_laurent("1 - e^{-4*u1}", 1)}
    rep = check_relations(pv, remark)
    names = [r.name for r, _ in rep.violations]
    if names != ["three-term"]:
        bad.append(f"remark triple violates {names}")
    for tag in ("pv", "p1p1", "fn:2", "pn:2", "kn:2"):
        kind = SurfaceKind.parse(tag)
        data = surface_data(kind)
        for i, (_, b) in enumerate(data.basis):
            unit = [LaurentPoly.const(1, int(i == k)) for k in range(len(data.basis))]
            if not check_relations(kind, b).ok or membership(kind, b) != unit:
                bad.append(f"{tag} basis element {i}")
    members = 0
    for tag in SPHERICAL_KINDS:
        m, b = spherical_equivalence(SurfaceKind.parse(tag), count)
        members += m
        bad += b
    total = count * len(SPHERICAL_KINDS)
    return not bad, f"basis and remark checks, {total} sampled tuples ({members} members)", bad


def criterion_9(jobs: int = 1):
    bad = _over_corpus("policy", jobs)
    n = sum(1 for e in _fans() for c in e.fan.maximal if not is_smooth(c))
    return not bad, f"{n - len(bad)}/{n} singular cones agree under {', '.join(PIVOT_POLICIES)}", bad


TITLES = {
    1: "P(1,1,2) multiplicity table",
    2: "P(1,1,2) dual basis",
    3: "Brion oracle on the corpus",
    4: "completeness sum",
    5: "Todd identity",
    6: "Adams-Riemann-Roch",
    7: "GRR pushforward",
    8: "spherical catalogue",
    9: "resolution independence",
}
LIMITS = {1: 1.0, 2: 1.0, 3: 60.0, 8: 120.0}


def run(numbers: list[int] | None = None, jobs: int = 1, samples: int = 10_000) -> list[CriterionResult]:
    funcs: dict[int, Callable[[], tuple[bool, str, list[str]]]] = {
        1: criterion_1,
        2: criterion_2,
        3: lambda: criterion_3(jobs),
        4: lambda: criterion_4(jobs),
        5: lambda: criterion_5(jobs),
        6: lambda: criterion_6(jobs),
        7: lambda: criterion_7(jobs),
        8: lambda: criterion_8(samples),
        9: lambda: criterion_9(jobs),
    }
    if numbers is None:
        _fans()  # build outside the timed sections
    out = []
    for k in numbers or sorted(funcs):
        out.append(_timed(k, TITLES[k], LIMITS.get(k), funcs[k]))
    return out
