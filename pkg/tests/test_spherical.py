from __future__ import annotations

import numpy as np
import pytest

from eqloc.charring import LaurentPoly, ParseError, parse_laurent
from eqloc.localize import FixedPointTuple, gkm_check
from eqloc.fan import walls
from eqloc.spherical import (
    CongruenceRelation,
    HalfWeightNotIntegral,
    NotMember,
    SurfaceKind,
    abbv_sum,
    assemble_system,
    check_relations,
    check_skeleton,
    membership,
    parse_labelled_tuple,
    parse_skeleton,
    pn_printed_relation,
    sample_tuples,
    surface_data,
    window_membership,
    window_system,
)

ALL_KINDS = ["point", "p1", "pv", "p1p1"] + [f"{t}:{n}" for t in ("fn", "pn", "kn") for n in (1, 2, 3)]


def T(text: str) -> LaurentPoly:
    return parse_laurent(text, 1, ["t"])


def family(**values) -> dict[str, LaurentPoly]:
    return {k: T(v) for k, v in values.items()}


def test_kind_parsing():
    assert SurfaceKind.parse("fn:3") == SurfaceKind("fn", 3)
    assert str(SurfaceKind.parse("P1xP1")) == "p1p1"
    with pytest.raises(ValueError):
        SurfaceKind.parse("fn")
    with pytest.raises(ValueError):
        SurfaceKind.parse("pv:2")
    with pytest.raises(ValueError):
        SurfaceKind.parse("torus")


def test_pv_basis_triples_pass():
    pv = SurfaceKind("pv")
    for _, b in surface_data(pv).basis:
        assert check_relations(pv, b).ok


def test_pv_remark_triple_fails_only_three_term():
    rep = check_relations(SurfaceKind("pv"), family(x="0", y="0", z="1 - e^{-4*t}"))
    assert not rep.ok
    assert [r.name for r, _ in rep.violations] == ["three-term"]
    # the pairwise conditions alone would accept it
    for r in surface_data(SurfaceKind("pv")).relations[:3]:
        assert r.evaluate(family(x="0", y="0", z="1 - e^{-4*t}")) is None


@pytest.mark.parametrize("tag", ALL_KINDS)
def test_standard_basis_restrictions(tag):
    kind = SurfaceKind.parse(tag)
    data = surface_data(kind)
    for i, (_, b) in enumerate(data.basis):
        assert check_relations(kind, b).ok
        unit = [LaurentPoly.const(1, int(i == k)) for k in range(len(data.basis))]
        assert membership(kind, b) == unit
        assert abbv_sum(kind, b).is_laurent()


@pytest.mark.parametrize("tag", ALL_KINDS)
def test_structure_sheaf_integrates_to_one(tag):
    kind = SurfaceKind.parse(tag)
    one = {p: LaurentPoly.one(1) for p in surface_data(kind).fixed_points}
    assert abbv_sum(kind, one).to_laurent() == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_fn_four_term_sign_fixed_by_integrality(n):
    kind = SurfaceKind("fn", n)
    rel = surface_data(kind).relations[-1]
    one = {p: LaurentPoly.one(1) for p in "xyzw"}
    assert rel.evaluate(one) is None
    flipped = CongruenceRelation(
        tuple((p, -c if p == "w" else c) for p, c in rel.coefficients), rel.modulus, "flipped"
    )
    assert flipped.evaluate(one) is not None


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pn_printed_relation_rejects_structure_sheaf(n):
    one = {p: LaurentPoly.one(1) for p in "xyz"}
    assert pn_printed_relation(n).evaluate(one) is not None
    assert check_relations(SurfaceKind("pn", n), one).ok


@pytest.mark.parametrize("tag", ["pv", "p1p1", "fn:1", "fn:2", "fn:3", "pn:2", "kn:3"])
def test_members_have_integral_localization_sums(tag):
    kind = SurfaceKind.parse(tag)
    rng = np.random.default_rng(3)
    for f in sample_tuples(kind, 60, 6, rng):
        if check_relations(kind, f).ok:
            assert abbv_sum(kind, f).is_laurent()


@pytest.mark.parametrize("tag", ["pv", "p1p1", "fn:1", "fn:2", "fn:3", "pn:1", "pn:3", "kn:2"])
def test_membership_relations_and_window_oracle_agree(tag):
    kind = SurfaceKind.parse(tag)
    rng = np.random.default_rng(11)
    tuples = sample_tuples(kind, 400, 8, rng)
    oracle = window_membership(window_system(kind, 8), tuples)
    members = 0
    for f, o in zip(tuples, oracle):
        rel = check_relations(kind, f).ok
        try:
            membership(kind, f)
            mem = True
        except NotMember:
            mem = False
        assert rel == mem == bool(o)
        members += mem
    assert 0 < members < len(tuples)


def test_window_backends_agree():
    kind = SurfaceKind("fn", 2)
    rng = np.random.default_rng(0)
    tuples = sample_tuples(kind, 300, 8, rng)
    system = window_system(kind, 8)
    a = window_membership(system, tuples, backend="numpy")
    b = window_membership(system, tuples, backend="numba")
    assert np.array_equal(a, b)


def test_not_member_reports_pivot():
    with pytest.raises(NotMember) as err:
        membership(SurfaceKind("pv"), family(x="0", y="0", z="1 - e^{-4*t}"))
    assert err.value.pivot == "z"


def test_subring():
    kind = SurfaceKind("p1")
    assert check_relations(kind, family(x="1", y="1")).ok
    odd = family(x="e^{t}", y="e^{t}")
    assert check_relations(kind, odd).ok
    assert not check_relations(kind, odd, subring=True).ok
    with pytest.raises(NotMember):
        membership(kind, odd, subring=True)


def test_wrong_fixed_points():
    with pytest.raises(KeyError):
        check_relations(SurfaceKind("pv"), family(x="1", y="1"))


# -- skeletons ----------------------------------------------------------------------


def test_pv_skeleton_relation_moduli():
    sk = parse_skeleton("rank 2\npoint a b c\nsurface pv root u1 points a b c\n")
    rels = assemble_system(sk)
    three = [r for r in rels if "three-term" in r.name]
    assert len(three) == 1
    assert three[0].modulus == ((1, 0), (2, 0))


def test_single_curve_skeleton():
    sk = parse_skeleton("rank 2\npoint p q\ncurve p q weight u1-u2\n")
    (rel,) = assemble_system(sk)
    assert rel.modulus == ((1, -1),)
    f = {"p": parse_laurent("1 - e^{-u1+u2}", 2), "q": LaurentPoly.zero(2)}
    assert check_skeleton(sk, f).ok
    assert not check_skeleton(sk, {"p": LaurentPoly.monomial((1, 0)), "q": LaurentPoly.zero(2)}).ok


def test_constant_family_passes(data_dir):
    sk = parse_skeleton((data_dir / "pv.skel").read_text())
    f = parse_labelled_tuple((data_dir / "pv_skel.tuple").read_text(), sk.rank)
    assert check_skeleton(sk, f).ok


def test_skeleton_with_failing_triple():
    sk = parse_skeleton("rank 2\npoint a b c\nsurface pv root u1 points a b c\n")
    f = {"a": LaurentPoly.zero(2), "b": LaurentPoly.zero(2), "c": parse_laurent("1 - e^{-2*u1}", 2)}
    rep = check_skeleton(sk, f)
    assert [r.name for r, _ in rep.violations] == ["pv three-term"]


def test_odd_fn_needs_half_root():
    sk = parse_skeleton("rank 2\npoint a b c d\nsurface fn:3 root u1+u2 points a b c d\n")
    with pytest.raises(HalfWeightNotIntegral):
        assemble_system(sk)
    ok = parse_skeleton("rank 2\npoint a b c d\nsurface fn:3 root 2*u1 points a b c d\n")
    assert len(assemble_system(ok)) == 5


def test_curve_skeleton_matches_gkm(p2):
    labels = [f"p{k}" for k in range(3)]
    lines = ["rank 2", "point " + " ".join(labels)]
    for w in walls(p2):
        lines.append(f"curve p{w.left} p{w.right} weight {w.weight[0]}*u1+{w.weight[1]}*u2".replace("+-", "-"))
    sk = parse_skeleton("\n".join(lines))
    rng = np.random.default_rng(2)
    agree = 0
    for _ in range(100):
        vals = [LaurentPoly(2, {tuple(int(x) for x in rng.integers(-1, 2, 2)): 1}) for _ in range(3)]
        a = check_skeleton(sk, dict(zip(labels, vals))).ok
        b = gkm_check(p2, FixedPointTuple(tuple(vals))).ok
        assert a == b
        agree += a
    assert agree > 0


@pytest.mark.parametrize(
    "text",
    [
        "point a\ncurve a b\n",
        "point a b\nsurface pv root u1 a b\n",
        "point a a\n",
        "widget\n",
        "point a b\ncurve a b weight u7\n",
    ],
)
def test_skeleton_parse_errors(text):
    with pytest.raises(ParseError):
        parse_skeleton(text)


def test_labelled_tuple_parsing(data_dir):
    f = parse_labelled_tuple((data_dir / "pv_remark.tuple").read_text(), 1, ["t"])
    assert f == family(x="0", y="0", z="1 - e^{-4*t}")
    with pytest.raises(ParseError):
        parse_labelled_tuple("x: 1\nx: 2\n")
    with pytest.raises(ParseError):
        parse_labelled_tuple("x = 1\n")
