"""Equivariant multiplicities of toric fixed points and orbit closures.

Smooth cones use the closed form 1/prod(1 - e^{m_i}) over the dual basis.
Singular cones are resolved and the smooth contributions over the cone are
summed.  Two independent oracles (parallelepiped closed form and direct
enumeration of the dual semigroup) live here too, for testing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .charring import (
    DEFAULT_DEGREE,
    LaurentPoly,
    LeadingTerm,
    LocalizedClass,
    ch_localized,
    restrict_characters,
)
from .fan import (
    Cone,
    Fan,
    cone_dim,
    dual_cone_generators,
    faces,
    is_smooth,
    parallelepiped_points,
    primitive,
    resolve_cone,
    tangent_weights,
)
from .lattice import Vector, det, dot, kernel


class DegenerateFixedPoint(ValueError):
    pass


def em_smooth(weights: Sequence[Sequence[int]], rank: int | None = None) -> LocalizedClass:
    """1 / prod(1 - e^{-lambda_i}) for nonzero tangent weights."""
    if rank is None:
        if not weights:
            raise ValueError("rank required for an empty weight list")
        rank = len(weights[0])
    for w in weights:
        if not any(w):
            raise DegenerateFixedPoint("zero tangent weight")
    return LocalizedClass(LaurentPoly.one(rank), [tuple(w) for w in weights])


@lru_cache(maxsize=4096)
def _em_cone(rank: int, rays: tuple[Vector, ...], policy: str) -> LocalizedClass:
    if rank == 0:
        return LocalizedClass.of(1, 0)
    c = Cone(tuple(range(len(rays))), rays)
    if cone_dim(rays) != rank:
        raise DegenerateFixedPoint("cone is not full-dimensional")
    if is_smooth(c):
        return em_smooth(tangent_weights(c), rank)
    res = resolve_cone(rank, rays, policy)
    total = LocalizedClass.of(0, rank)
    for sub in res.fan.maximal:
        total = total + em_smooth(tangent_weights(sub), rank)
    return total


def em_cone(rank: int, rays: Sequence[Sequence[int]], policy: str = "min-height") -> LocalizedClass:
    """Multiplicity at the fixed point of the affine toric variety of a full cone."""
    return _em_cone(rank, tuple(tuple(r) for r in rays), policy)


def em_point(fan: Fan, sigma: Cone, policy: str = "min-height") -> LocalizedClass:
    return em_cone(fan.rank, sigma.rays, policy)


def _image_rays(rays: Sequence[Vector], basis: Sequence[Vector]) -> tuple[Vector, ...]:
    """Extremal primitive generators of the image of cone(rays) in Z^k (coordinates via basis)."""
    imgs = []
    for v in rays:
        w = tuple(dot(b, v) for b in basis)
        if any(w):
            w = primitive(w)
            if w not in imgs:
                imgs.append(w)
    fs = faces(imgs)
    return tuple(w for i, w in enumerate(imgs) if frozenset([i]) in fs)


def embed_class(x: LocalizedClass, basis: Sequence[Vector], n: int) -> LocalizedClass:
    """Push a class on the sublattice with the given basis into Z^n."""
    q = [[b[r] for b in basis] for r in range(n)]
    num = restrict_characters(x.numerator, q) if basis else LaurentPoly.const(n, x.numerator.constant_term())
    den = [tuple(sum(c * b[r] for c, b in zip(w, basis)) for r in range(n)) for w in x.denominator]
    return LocalizedClass(num, den)


def em_orbit_closure(fan: Fan, tau: Cone, policy: str = "min-height") -> list[LocalizedClass]:
    """Multiplicities of V(tau) at every maximal cone (zero off the star of tau).

    V(tau) is the toric variety of the star fan in N/span(tau), whose
    character lattice is tau^perp cap M; a saturated basis of the latter
    identifies it with Z^k and results are pushed back into M.
    """
    if not fan.has_cone(tau.index):
        raise KeyError(f"cone {list(tau.index)} is not in the fan")
    n = fan.rank
    basis = kernel([list(r) for r in tau.rays], n) if tau.rays else kernel([], n)
    k = len(basis)
    out = []
    for sigma in fan.maximal:
        if not set(tau.index) <= set(sigma.index):
            out.append(LocalizedClass.of(0, n))
            continue
        img = _image_rays(sigma.rays, basis)
        out.append(embed_class(em_cone(k, img, policy), basis, n))
    return out


def em_chow(x: LocalizedClass, degree: int = DEFAULT_DEGREE) -> LeadingTerm:
    """Leading term of ch of an equivariant K-multiplicity."""
    return ch_localized(x, degree).leading_term()


@dataclass
class MultiplicityTable:
    fan: Fan
    k_classes: list[LocalizedClass]
    a_classes: list[LeadingTerm]


def multiplicity_table(fan: Fan, degree: int = DEFAULT_DEGREE, policy: str = "min-height") -> MultiplicityTable:
    ks = [em_point(fan, c, policy) for c in fan.maximal]
    return MultiplicityTable(fan, ks, [em_chow(x, degree) for x in ks])


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------


def em_parallelepiped(rays: Sequence[Sequence[int]]) -> LocalizedClass:
    """Closed form sum_{m in Pi} e^m / prod(1 - e^{g_i}) for a full simplicial cone.

    g_i are the primitive generators of the dual cone and Pi the lattice
    points of their half-open parallelepiped.
    """
    n = len(rays[0])
    c = Cone(tuple(range(len(rays))), tuple(tuple(r) for r in rays))
    gens = dual_cone_generators(c)
    num = LaurentPoly.zero(n)
    for m, _ in parallelepiped_points(gens):
        num = num + LaurentPoly.monomial(m)
    return LocalizedClass(num, [tuple(-x for x in g) for g in gens])


def em_chow_oracle(rays: Sequence[Sequence[int]]) -> LeadingTerm:
    """index(g) / prod(-g_i): the leading term read off the closed form."""
    n = len(rays[0])
    c = Cone(tuple(range(len(rays))), tuple(tuple(r) for r in rays))
    gens = dual_cone_generators(c)
    return LeadingTerm({(0,) * n: Fraction(abs(det(gens)))}, [tuple(-x for x in g) for g in gens], n)


def semigroup_points(rays: Sequence[Sequence[int]], bound: int, backend: str | None = None) -> list[Vector]:
    """Points m of sigma^dual cap M with <m, sum of rays> <= bound (full simplicial sigma)."""
    n = len(rays[0])
    c = Cone(tuple(range(len(rays))), tuple(tuple(r) for r in rays))
    psi = tuple(sum(r[i] for r in rays) for i in range(n))
    gens = dual_cone_generators(c)
    corners = [[0] * n] + [[bound * g[i] / dot(g, psi) for i in range(n)] for g in gens]
    lo = [int(np.floor(min(v[i] for v in corners))) for i in range(n)]
    hi = [int(np.ceil(max(v[i] for v in corners))) for i in range(n)]
    A = np.array([list(r) for r in rays] + [[-x for x in psi]], dtype=np.int64)
    b = np.array([0] * len(rays) + [-bound], dtype=np.int64)
    return [tuple(int(x) for x in p) for p in kernels.box_points(A, b, lo, hi, backend=backend)]


def hilbert_series_check(rays: Sequence[Sequence[int]], em: LocalizedClass, backend: str | None = None) -> bool:
    """Compare em with the enumerated Hilbert series of sigma^dual cap M.

    Both sides are multiplied by prod(1 - e^{g_i}); the product with the
    truncated enumeration is exact in every degree <= bound because each
    g_i has positive degree.  The bound covers both numerator supports.
    """
    n = len(rays[0])
    c = Cone(tuple(range(len(rays))), tuple(tuple(r) for r in rays))
    psi = tuple(sum(r[i] for r in rays) for i in range(n))
    gens = dual_cone_generators(c)
    clear = LaurentPoly.one(n)
    for g in gens:
        clear = clear * (LaurentPoly.one(n) - LaurentPoly.monomial(g))
    lhs = em * clear
    if not lhs.is_laurent():
        return False
    p = lhs.to_laurent()
    top = max((dot(e, psi) for e in p.support()), default=0)
    bound = max(top, 2 * sum(dot(g, psi) for g in gens))
    h = LaurentPoly(n, {m: 1 for m in semigroup_points(rays, bound, backend)})
    q = h * clear
    trunc = LaurentPoly(n, {e: v for e, v in q.terms.items() if dot(e, psi) <= bound})
    return trunc == p
