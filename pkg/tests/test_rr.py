from __future__ import annotations

from fractions import Fraction

import pytest

from eqloc.charring import TruncatedSeries
from eqloc.corpus import cube_fan, hirzebruch, product, projective_space
from eqloc.fan import Fan, TDivisor
from eqloc.rr import (
    bernoulli_plus,
    todd_smooth,
    verify_adams_rr_point,
    verify_grr_pushforward,
    verify_todd_identity,
)


def test_bernoulli_numbers():
    assert bernoulli_plus(6) == tuple(Fraction(x) for x in ("1", "1/2", "1/6", "0", "-1/30", "0", "1/42"))


def test_todd_of_a_line():
    td = todd_smooth([(1,)], 4)
    expected = TruncatedSeries(1, 4, {(0,): 1, (1,): Fraction(1, 2), (2,): Fraction(1, 12), (4,): Fraction(-1, 720)})
    assert td == expected


def test_todd_requires_nonzero_weights():
    with pytest.raises(ValueError):
        todd_smooth([(0, 0)], 3)


@pytest.mark.parametrize("fan", [projective_space(2), projective_space(3), hirzebruch(3)])
def test_todd_identity_smooth(fan):
    for c in fan.maximal:
        rep = verify_todd_identity(fan, c, 10)
        assert rep.ok, rep.checks


def test_todd_identity_singular_point(p112):
    rep = verify_todd_identity(p112, p112.cone((0, 2)), 10)
    assert rep.ok
    assert rep.checks[0].degree == 10


def test_todd_identity_weighted_threefold():
    f = Fan(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, -1, -2)], [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])
    for c in f.maximal:
        assert verify_todd_identity(f, c, 8).ok


@pytest.mark.parametrize("j", [1, 2, 3, 5])
def test_adams_rr_p112(p112, j):
    for c in p112.maximal:
        rep = verify_adams_rr_point(p112, c, j)
        assert rep.ok, [ch.label for ch in rep.checks if not ch.ok]
    singular = verify_adams_rr_point(p112, p112.cone((0, 2)), j)
    assert len(singular.checks) == 2


@pytest.mark.parametrize("j", [2, 3])
def test_adams_rr_cube(j):
    f = cube_fan()
    for c in f.maximal:
        assert verify_adams_rr_point(f, c, j).ok


@pytest.mark.parametrize(
    "fan, coeffs",
    [
        (projective_space(1), (0, 3)),
        (projective_space(2), (0, 0, 2)),
        (product(projective_space(1), projective_space(1)), (0, 0, 2, 1)),
        (hirzebruch(1), (1, 0, 0, 1)),
    ],
)
def test_grr_pushforward(fan, coeffs):
    rep = verify_grr_pushforward(fan, TDivisor("d", coeffs), 8)
    assert rep.ok, rep.checks[0].first_difference


def test_grr_rank_three():
    rep = verify_grr_pushforward(projective_space(3), TDivisor("d", (0, 0, 0, 1)), 6)
    assert rep.ok


def test_grr_needs_smooth_fan(p112):
    with pytest.raises(ValueError):
        verify_grr_pushforward(p112, TDivisor("d", (1, 1, 1)))


def test_first_difference_reported():
    a = todd_smooth([(1,)], 4)
    b = todd_smooth([(2,)], 4)
    mono, x, y = a.first_difference(b)
    assert mono == (1,) and x == Fraction(1, 2) and y == 1
