"""Regression corpus of complete fans of rank <= 3 with nef divisors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fan import Fan, TDivisor, divisor_polytope, is_nef, resolve, stellar_subdivide
from .lattice import primitive


@dataclass
class CorpusEntry:
    name: str
    fan: Fan
    divisors: list[TDivisor]


def projective_space(n: int) -> Fan:
    rays = [tuple(int(i == j) for j in range(n)) for i in range(n)] + [tuple([-1] * n)]
    return Fan(n, rays, list(itertools.combinations(range(n + 1), n)))


def hirzebruch(a: int) -> Fan:
    return Fan(2, [(1, 0), (0, 1), (-1, a), (0, -1)], [(0, 1), (1, 2), (2, 3), (3, 0)])


def product(f: Fan, g: Fan) -> Fan:
    n, m = f.rank, g.rank
    rays = [r + (0,) * m for r in f.rays] + [(0,) * n + r for r in g.rays]
    off = len(f.rays)
    cones = [a + tuple(off + j for j in b) for a in f.maximal_index for b in g.maximal_index]
    return Fan(n + m, rays, cones)


def cube_fan() -> Fan:
    rays = list(itertools.product((-1, 1), repeat=3))
    idx = {v: i for i, v in enumerate(rays)}
    cones = [[idx[v] for v in rays if v[ax] == s] for ax in range(3) for s in (-1, 1)]
    return Fan(3, rays, cones)


def random_smooth_refinement(fan: Fan, steps: int, seed: int) -> Fan:
    """Blow up torus-invariant strata: insert the sum of the rays of a random face."""
    rng = np.random.default_rng(seed)
    cur = fan
    for _ in range(steps):
        c = cur.maximal_index[int(rng.integers(len(cur.maximal_index)))]
        k = int(rng.integers(2, len(c) + 1))
        face = sorted(rng.choice(len(c), size=k, replace=False))
        w = primitive(tuple(sum(cur.rays[c[i]][j] for i in face) for j in range(cur.rank)))
        cur, _, _ = stellar_subdivide(cur, w)
    return Fan(cur.rank, cur.rays, cur.maximal_index)


def nef_divisors(fan: Fan, count: int = 3, box: int = 2) -> list[TDivisor]:
    """D = 0, at least ``count`` nonzero nef divisors with distinct polytopes, and a larger sum.

    Candidates come from a small coefficient box ordered by size; sums of
    nef divisors are nef, so pairwise sums top the list up when the box is
    too small, and twice the total of everything found is added last.
    """
    n = len(fan.rays)
    found: list[tuple[int, ...]] = []
    seen = set()

    def shape(a):
        verts = divisor_polytope(fan, TDivisor("", a)).vertices
        shift = tuple(min(v[i] for v in verts) for i in range(fan.rank))
        return tuple(sorted(tuple(x - s for x, s in zip(v, shift)) for v in verts))

    def offer(a):
        if not any(a) or not is_nef(fan, TDivisor("", a)):
            return
        key = shape(a)
        if key not in seen and shape((0,) * n) != key:
            seen.add(key)
            found.append(a)

    for a in sorted(itertools.product(range(box + 1), repeat=n), key=lambda a: (sum(a), a)):
        if len(found) >= count:
            break
        offer(a)
    base = list(found)
    for x, y in itertools.combinations_with_replacement(base, 2):
        if len(found) >= count:
            break
        offer(tuple(i + j for i, j in zip(x, y)))
    if not found:
        raise ValueError("no nonzero nef divisor found")
    total = tuple(2 * sum(col) for col in zip(*found))
    found.append(total)
    divs = [TDivisor("D0", (0,) * n)]
    divs += [TDivisor(f"D{i + 1}", a) for i, a in enumerate(found)]
    return divs


@lru_cache(maxsize=1)
def corpus() -> tuple[CorpusEntry, ...]:
    fans: list[tuple[str, Fan]] = [
        ("P1", projective_space(1)),
        ("P2", projective_space(2)),
        ("P1xP1", product(projective_space(1), projective_space(1))),
        ("P(1,1,2)", Fan(2, [(1, 0), (0, 1), (-1, -2)], [(0, 1), (0, 2), (1, 2)])),
        ("P(1,2,3)", Fan(2, [(1, 0), (0, 1), (-2, -3)], [(0, 1), (0, 2), (1, 2)])),
        ("F1", hirzebruch(1)),
        ("F2", hirzebruch(2)),
        ("F3", hirzebruch(3)),
        ("P2-blown-up-x3", random_smooth_refinement(projective_space(2), 3, seed=11)),
        ("P1xP1-refined", random_smooth_refinement(product(projective_space(1), projective_space(1)), 2, seed=5)),
        ("P3", projective_space(3)),
        ("P1xP1xP1", product(product(projective_space(1), projective_space(1)), projective_space(1))),
        ("P2xP1", product(projective_space(2), projective_space(1))),
        ("P(1,1,1,2)", Fan(3, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, -1, -2)], list(itertools.combinations(range(4), 3)))),
        ("cube", cube_fan()),
        ("P3-refined-a", random_smooth_refinement(projective_space(3), 2, seed=3)),
        ("P3-refined-b", random_smooth_refinement(projective_space(3), 3, seed=8)),
        ("F1xP1", product(hirzebruch(1), projective_space(1))),
    ]
    fans.append(("P(1,2,3)-resolved", resolve(fans[4][1]).fan))
    fans.append(("P(1,1,1,2)-resolved", resolve(fans[13][1]).fan))
    fans.append(("F2-refined", random_smooth_refinement(hirzebruch(2), 2, seed=21)))
    out = []
    for name, f in fans:
        f = Fan(f.rank, f.rays, f.maximal_index)  # validated copy
        out.append(CorpusEntry(name, f, nef_divisors(f)))
    return tuple(out)
