from __future__ import annotations

import numpy as np
import pytest

from eqloc.charring import LaurentPoly, LeadingTerm, LocalizedClass, parse_laurent
from eqloc.corpus import cube_fan, projective_space
from eqloc.fan import PIVOT_POLICIES, Cone, is_simplicial
from eqloc.lattice import det, vgcd
from eqloc.multiplicity import (
    DegenerateFixedPoint,
    em_chow,
    em_chow_oracle,
    em_cone,
    em_orbit_closure,
    em_parallelepiped,
    em_point,
    em_smooth,
    hilbert_series_check,
    multiplicity_table,
    semigroup_points,
)


def loc(num: str, *weights) -> LocalizedClass:
    """num / prod(1 - e^{w}) with the weights written as they appear in the denominator."""
    return LocalizedClass(parse_laurent(num, 2), [tuple(-x for x in w) for w in weights])


def test_smooth_multiplicity_is_tangent_cone_series():
    x = em_smooth([(-1, 0), (0, -1)])
    assert x == loc("1", (1, 0), (0, 1))
    with pytest.raises(DegenerateFixedPoint):
        em_smooth([(0, 0), (1, 0)])


def test_p112_point_multiplicities(p112):
    got = [em_point(p112, c) for c in p112.maximal]
    assert got == [
        loc("1", (1, 0), (0, 1)),
        loc("1 + e^{u1-u2}", (2, -1), (0, -1)),
        loc("1", (-1, 0), (-2, 1)),
    ]


def test_p112_orbit_closures(p112):
    D = em_orbit_closure(p112, p112.cone((2,)))
    assert D == [LocalizedClass.of(0, 2), loc("1", (2, -1)), loc("1", (-2, 1))]
    p = em_orbit_closure(p112, p112.cone((0, 2)))
    assert p == [LocalizedClass.of(c, 2) for c in (0, 1, 0)]


def test_p112_chow_multiplicity(p112):
    a = em_chow(em_point(p112, p112.cone((0, 2))))
    # two lattice points in the parallelepiped, dual generators (0,-1) and (2,-1)
    assert a == LeadingTerm({(0, 0): 2}, [(0, 1), (-2, 1)], 2)
    assert a.degree == -2


def test_table_sums_to_one(p112):
    t = multiplicity_table(p112)
    total = sum(t.k_classes[1:], t.k_classes[0])
    assert total == LocalizedClass.of(1, 2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_projective_space_sum(n):
    f = projective_space(n)
    total = LocalizedClass.of(0, n)
    for c in f.maximal:
        total = total + em_point(f, c)
    assert total == LocalizedClass.of(1, n)


def test_orbit_closure_of_point_and_zero_cone(p2):
    for k, c in enumerate(p2.maximal):
        row = em_orbit_closure(p2, c)
        assert [x == LocalizedClass.of(int(i == k), 2) for i, x in enumerate(row)] == [True] * 3
    assert em_orbit_closure(p2, p2.cone(())) == [em_point(p2, c) for c in p2.maximal]


def test_orbit_closure_not_in_fan(p2):
    with pytest.raises(KeyError):
        em_orbit_closure(p2, Cone((0, 1, 2), ((1, 0), (0, 1), (-1, -1))))


def _random_simplicial_cones(rank: int, count: int, seed: int, box: int = 3):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        rays = [tuple(int(x) for x in rng.integers(-box, box + 1, size=rank)) for _ in range(rank)]
        if any(vgcd(r) != 1 for r in rays) or det(rays) == 0:
            continue
        out.append(rays)
    return out


@pytest.mark.parametrize("rays", _random_simplicial_cones(2, 12, 0) + _random_simplicial_cones(3, 6, 1, box=2))
def test_multiplicity_matches_closed_form_and_hilbert_series(rays):
    n = len(rays)
    em = em_cone(n, rays)
    assert em == em_parallelepiped(rays)
    assert hilbert_series_check(rays, em)
    assert em_chow(em) == em_chow_oracle(rays)


@pytest.mark.parametrize("rays", _random_simplicial_cones(2, 6, 2) + _random_simplicial_cones(3, 4, 3, box=2))
def test_pivot_policies_agree(rays):
    vals = [em_cone(len(rays), rays, p) for p in PIVOT_POLICIES]
    assert all(v == vals[0] for v in vals)


def test_hilbert_series_check_rejects_wrong_class():
    rays = [(1, 0), (1, 2)]
    wrong = em_cone(2, rays) + LocalizedClass.of(LaurentPoly.monomial((0, 1)))
    assert not hilbert_series_check(rays, wrong)


def test_semigroup_points_backends_agree():
    rays = [(1, 0, 0), (0, 1, 0), (1, 1, 3)]
    a = semigroup_points(rays, 6, backend="numpy")
    b = semigroup_points(rays, 6, backend="numba")
    assert a == b and (0, 0, 0) in a


def test_non_simplicial_cone_multiplicity():
    f = cube_fan()
    c = f.maximal[0]
    assert not is_simplicial(c)
    em = em_point(f, c)
    assert em == em_point(f, c, "first-lex")
    # the sum over the fan still gives 1 with the non-simplicial points included
    total = LocalizedClass.of(0, 3)
    for s in f.maximal:
        total = total + em_point(f, s)
    assert total == LocalizedClass.of(1, 3)
    assert not em.is_laurent()


def test_degenerate_cone():
    with pytest.raises(DegenerateFixedPoint):
        em_cone(2, [(1, 0)])


def test_em_orbit_closures_of_rays_in_rank_three():
    f = projective_space(3)
    for i in range(4):
        row = em_orbit_closure(f, f.cone((i,)))
        for k, c in enumerate(f.maximal_index):
            assert row[k].is_zero() == (i not in c)
