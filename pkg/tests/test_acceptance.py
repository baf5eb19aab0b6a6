"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line; conftest prints them at the end of the
session.  The expected P(1,1,2) values are written out here independently of
the constants in ``eqloc.suite``.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from eqloc.charring import LaurentPoly, LocalizedClass, adams, bott, parse_exponent, parse_laurent
from eqloc.corpus import corpus
from eqloc.fan import PIVOT_POLICIES, Fan, is_simplicial, is_smooth
from eqloc.localize import brion_oracle, dual_basis, euler_char
from eqloc.multiplicity import em_cone, em_orbit_closure, em_point
from eqloc.rr import verify_adams_rr_point, verify_grr_pushforward, verify_todd_identity
from eqloc.spherical import (
    NotMember,
    SurfaceKind,
    check_relations,
    membership,
    sample_tuples,
    surface_data,
    window_membership,
    window_system,
)

RESULTS: dict[int, str] = {}


def record(number: int, ok: bool, detail: str, seconds: float, limit: float | None = None) -> None:
    within = limit is None or seconds < limit
    status = "PASS" if ok and within else "FAIL"
    budget = f" (limit {limit:g} s)" if limit is not None else ""
    RESULTS[number] = f"criterion {number}: {status} {detail} [{seconds:.2f} s{budget}]"


@pytest.fixture(scope="module")
def fans():
    return corpus()


def P(text: str, rank: int = 2) -> LaurentPoly:
    return parse_laurent(text, rank)


def over(num: str, *dens: str) -> LocalizedClass:
    """num / prod(1 - e^{d})."""
    return LocalizedClass(P(num), [tuple(-x for x in parse_exponent(d, 2)) for d in dens])


def p112() -> Fan:
    return Fan(2, [(1, 0), (0, 1), (-1, -2)], [(0, 1), (0, 2), (1, 2)])


def test_criterion_1_multiplicity_table():
    expected = {
        (): [over("1", "u1", "u2"), over("1 + e^{u1-u2}", "2*u1-u2", "-u2"), over("1", "-u1", "-2*u1+u2")],
        (2,): [LocalizedClass.of(0, 2), over("1", "2*u1-u2"), over("1", "-2*u1+u2")],
        (0, 2): [LocalizedClass.of(0, 2), LocalizedClass.of(1, 2), LocalizedClass.of(0, 2)],
    }
    t0 = time.perf_counter()
    f = p112()
    got = {idx: em_orbit_closure(f, f.cone(idx)) for idx in expected}
    seconds = time.perf_counter() - t0
    equal = sum(x == y for idx in expected for x, y in zip(got[idx], expected[idx]))
    record(1, equal == 9, f"{equal}/9 entries equal", seconds, 1.0)
    assert equal == 9
    assert seconds < 1.0


def test_criterion_2_dual_basis():
    image = [
        ["1 - e^{u1} - e^{u2} + e^{u1+u2}", "e^{u1} - e^{u1+u2}", "e^{u2}"],
        ["e^{u1} - e^{u1+u2}", "e^{-u1+u2} + e^{u1+u2} + e^{u2} - e^{u1}", "-e^{u2} - e^{-u1+u2}"],
        ["e^{u2}", "-e^{u2} - e^{-u1+u2}", "e^{-u1+u2}"],
    ]
    printed = P("e^{-u1+2*u2} + e^{u2}")
    t0 = time.perf_counter()
    f = p112()
    db = dual_basis(f, [f.cone(()), f.cone((2,)), f.cone((0, 2))])
    seconds = time.perf_counter() - t0
    images_ok = db.image == [[P(x) for x in row] for row in image]
    # the raw determinant differs from the printed one by the unit -1
    det_ok = db.determinant == -printed and db.determinant_up_to_sign == printed
    record(2, images_ok and det_ok, f"images {'equal' if images_ok else 'differ'}, determinant = -(printed)", seconds, 1.0)
    assert images_ok and det_ok
    assert seconds < 1.0


def test_criterion_3_brion(fans):
    t0 = time.perf_counter()
    bad = [f"{e.name}/{D.name}" for e in fans for D in e.divisors if euler_char(e.fan, D) != brion_oracle(e.fan, D)]
    seconds = time.perf_counter() - t0
    n = sum(len(e.divisors) for e in fans)
    nef_counts = [len(e.divisors) for e in fans]
    shape = len(fans) >= 20 and min(nef_counts) >= 3 and all(e.fan.rank <= 3 and e.fan.complete for e in fans)
    record(3, shape and not bad, f"{len(fans)} fans, {n - len(bad)}/{n} divisors agree", seconds, 60.0)
    assert shape
    assert not bad
    assert seconds < 60.0


def test_corpus_contains_required_families(fans):
    names = {e.name for e in fans}
    for required in ("P1", "P2", "P1xP1", "P(1,1,2)", "cube"):
        assert any(n.startswith(required) for n in names), required
    assert any(n.startswith("F") for n in names)


def test_criterion_4_completeness_sum(fans):
    t0 = time.perf_counter()
    bad = []
    for e in fans:
        total = LocalizedClass.of(0, e.fan.rank)
        for c in e.fan.maximal:
            total = total + em_point(e.fan, c)
        if total != LocalizedClass.of(1, e.fan.rank):
            bad.append(e.name)
    record(4, not bad, f"{len(fans) - len(bad)}/{len(fans)} fans sum to 1", time.perf_counter() - t0)
    assert not bad


def test_criterion_5_todd(fans):
    t0 = time.perf_counter()
    bad, smooth, singular = [], 0, 0
    for e in fans:
        for c in e.fan.maximal:
            if is_smooth(c):
                smooth += 1
            elif is_simplicial(c):
                singular += 1
            if not verify_todd_identity(e.fan, c, 10).ok:
                bad.append(f"{e.name} {list(c.index)}")
    record(5, not bad and singular > 0, f"{smooth} smooth, {singular} singular simplicial points, {len(bad)} failures", time.perf_counter() - t0)
    assert singular > 0
    assert not bad


def test_criterion_6_adams_rr(fans):
    t0 = time.perf_counter()
    bad = []
    points = 0
    for e in fans:
        for c in e.fan.maximal:
            points += 1
            for j in (1, 2, 3, 5):
                if not verify_adams_rr_point(e.fan, c, j).ok:
                    bad.append(f"{e.name} {list(c.index)} j={j}")
    # property tests on 1000 random inputs
    rng = np.random.default_rng(2024)
    prop_bad = 0
    for _ in range(1000):
        rank = int(rng.integers(1, 4))
        j, k = (int(x) for x in rng.integers(1, 7, size=2))
        n = int(rng.integers(0, 5))
        weights = []
        while len(weights) < n:
            w = tuple(int(x) for x in rng.integers(-3, 4, size=rank))
            if any(w):
                weights.append((w, 1))
        th = bott(j, weights, rank)
        if not (th.is_laurent() and th.to_laurent().augmentation() == j**n):
            prop_bad += 1
        terms = {tuple(int(x) for x in rng.integers(-4, 5, size=rank)): int(rng.integers(-3, 4)) for _ in range(5)}
        f = LaurentPoly(rank, terms)
        if adams(j, adams(k, f)) != adams(j * k, f):
            prop_bad += 1
    ok = not bad and prop_bad == 0
    record(6, ok, f"{4 * points - len(bad)}/{4 * points} point checks, {2000 - prop_bad}/2000 property checks", time.perf_counter() - t0)
    assert not bad
    assert prop_bad == 0


def test_criterion_7_grr(fans):
    t0 = time.perf_counter()
    smooth = [e for e in fans if e.fan.is_smooth()]
    bad = [f"{e.name}/{D.name}" for e in smooth for D in e.divisors if not verify_grr_pushforward(e.fan, D, 8).ok]
    n = sum(len(e.divisors) for e in smooth)
    record(7, bool(smooth) and not bad, f"{len(smooth)} smooth fans, {n - len(bad)}/{n} divisors to degree 8", time.perf_counter() - t0)
    assert smooth
    assert not bad


def test_criterion_8_spherical():
    t0 = time.perf_counter()
    failures = []
    pv = SurfaceKind("pv")
    for _, b in surface_data(pv).basis:
        if not check_relations(pv, b).ok:
            failures.append("pv basis")
    t = lambda s: parse_laurent(s, 1, ["t"])  # noqa: E731
    remark = check_relations(pv, {"x": t("0"), "y": t("0"), "z": t("1 - e^{-4*t}")})
    if [r.name for r, _ in remark.violations] != ["three-term"]:
        failures.append("remark triple")
    for tag in ("pv", "p1p1", "fn:2", "pn:2", "kn:2"):
        kind = SurfaceKind.parse(tag)
        basis = surface_data(kind).basis
        for i, (_, b) in enumerate(basis):
            unit = [LaurentPoly.const(1, int(i == k)) for k in range(len(basis))]
            if not check_relations(kind, b).ok or membership(kind, b) != unit:
                failures.append(f"{tag} basis {i}")
    count = 10_000
    members = 0
    for tag in ("pv", "p1p1", "fn:1", "fn:2", "fn:3"):
        kind = SurfaceKind.parse(tag)
        tuples = sample_tuples(kind, count, 8, np.random.default_rng(99))
        assert len(tuples) >= count
        oracle = window_membership(window_system(kind, 8), tuples)
        for f, o in zip(tuples, oracle):
            rel = check_relations(kind, f).ok
            try:
                membership(kind, f)
                mem = True
            except NotMember:
                mem = False
            members += mem
            if not rel == mem == bool(o):
                failures.append(f"{tag} disagreement")
    seconds = time.perf_counter() - t0
    record(8, not failures, f"5 kinds x {count} tuples ({members} members), {len(failures)} failures", seconds, 120.0)
    assert not failures, failures[:5]
    assert 0 < members < 5 * count
    assert seconds < 120.0


def test_criterion_9_policies(fans):
    t0 = time.perf_counter()
    bad, n = [], 0
    assert len(PIVOT_POLICIES) >= 2
    for e in fans:
        for c in e.fan.maximal:
            if is_smooth(c):
                continue
            n += 1
            vals = [em_cone(e.fan.rank, c.rays, p) for p in PIVOT_POLICIES]
            if any(v != vals[0] for v in vals):
                bad.append(f"{e.name} {list(c.index)}")
    record(9, n > 0 and not bad, f"{n - len(bad)}/{n} singular cones agree", time.perf_counter() - t0)
    assert n > 0
    assert not bad
