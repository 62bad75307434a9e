"""Reflexive polygons, star configurations, and the twelve identity.

A star configuration is a cyclic list of primitive lattice vectors that
turns counterclockwise and winds around the origin exactly once. Vertex
cycles of polygons with a unique interior lattice point are the convex
examples, but the notion deliberately allows reflex corners. For every
star the sum of the edge determinants and the corner determinants equals
twelve; this module computes both halves of that identity and, as an
independent cross check, the same number through elementary fan
subdivision and self intersection numbers.

The module also carries the polar duality of reflexive polygons and the
classification of reflexive polygons up to unimodular equivalence into
sixteen classes, built here by explicit enumeration over a box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .lattice import (
    LatticePolytope,
    Vec,
    affine_length,
    content,
    det2,
    primitive,
    turn_fraction,
    vadd,
    vneg,
    vscale,
    vsub,
)

__all__ = [
    "StarConfiguration",
    "twelve_sum",
    "toric_oracle",
    "is_reflexive",
    "ReflexivePolygon",
    "dual_polygon",
    "vertex_orders",
    "edge_lengths",
    "canonical_form",
    "reflexive_catalog",
    "catalog_entry",
    "catalog_class",
    "hirzebruch_star",
    "polygon_to_json",
    "polygon_from_json",
]


# ---------------------------------------------------------------------------
# star configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarConfiguration:
    """Primitive vectors winding once counterclockwise around the origin.

    Consecutive vectors must span positively oriented triangles with no
    interior lattice points, so the cones between them are the maximal
    cones of a complete fan whose rays may repeat directions seen from a
    reflex corner but never turn backwards.
    """

    vectors: tuple[Vec, ...]

    def __init__(self, vectors: Iterable[Sequence[int]]):
        vs = tuple(tuple(int(x) for x in v) for v in vectors)
        object.__setattr__(self, "vectors", vs)
        if len(vs) < 3:
            raise ValueError("a star needs at least three vectors")
        for i, v in enumerate(vs):
            if len(v) != 2:
                raise ValueError(f"vector {i} is not a plane vector")
            if content(v) != 1:
                raise ValueError(f"vector {i} = {v} is not primitive")
        m = len(vs)
        for i in range(m):
            a, b = vs[i], vs[(i + 1) % m]
            d = det2(a, b)
            if d <= 0:
                raise ValueError(
                    f"vectors {i} and {(i + 1) % m} do not turn counterclockwise"
                )
            # det equal to content is exactly the absence of interior
            # lattice points in the triangle spanned with the origin.
            if d != content(vsub(b, a)):
                raise ValueError(
                    f"triangle of vectors {i} and {(i + 1) % m} has interior points"
                )
        total = sum(turn_fraction(vs[i], vs[(i + 1) % m]) for i in range(m))
        if total != 4:
            raise ValueError(f"star winds {total / 4} times around the origin, not once")

    @property
    def m(self) -> int:
        return len(self.vectors)

    @property
    def edge_dets(self) -> tuple[int, ...]:
        """det of each consecutive pair, one positive entry per cone."""
        vs = self.vectors
        return tuple(det2(vs[i], vs[(i + 1) % self.m]) for i in range(self.m))

    @property
    def tangents(self) -> tuple[Vec, ...]:
        """Primitive direction of each difference v_{i+1} - v_i."""
        vs = self.vectors
        return tuple(
            primitive(vsub(vs[(i + 1) % self.m], vs[i])) for i in range(self.m)
        )

    @property
    def orders(self) -> tuple[int, ...]:
        """Signed corner determinant at each vector.

        Entry i is det of the incoming and outgoing primitive tangents at
        v_i; it is negative exactly at reflex corners and zero where the
        boundary passes straight through.
        """
        u = self.tangents
        return tuple(det2(u[i - 1], u[i]) for i in range(self.m))

    def is_convex(self) -> bool:
        return all(o > 0 for o in self.orders)


def twelve_sum(star: StarConfiguration) -> int:
    """Edge determinants plus corner determinants; always twelve."""
    return sum(star.edge_dets) + sum(star.orders)


def hirzebruch_star(a: int) -> StarConfiguration:
    """Star of the fan of the Hirzebruch surface with a curve of square -a.

    Convex only for a <= 1; a = 2 has a flat corner and larger a have a
    genuinely reflex corner, which makes the family a convenient source of
    non convex test stars.
    """
    if a < 0:
        raise ValueError("the index must be non negative")
    return StarConfiguration([(1, 0), (0, 1), (-1, a), (0, -1)])


# ---------------------------------------------------------------------------
# toric oracle for twelve
# ---------------------------------------------------------------------------

_MEDIANT_GUARD = 10_000


def _hull_chain(a: Vec, b: Vec) -> tuple[Vec, ...]:
    """Unimodular chain from a to b read off the hull of the cone's points.

    The nonzero lattice points of the triangle with vertices 0, a, b form
    a hull whose boundary arc nearest the origin is the desired chain; we
    pick the arc along which all consecutive determinants are one.
    """
    tri = LatticePolytope([(0, 0), a, b])
    pts = [p for p in tri.lattice_points() if p != (0, 0)]
    hull = LatticePolytope(pts)
    cycle = list(hull.boundary_cycle())
    if hull.dim == 1:
        ia, ib = cycle.index(a), cycle.index(b)
        arc = cycle[min(ia, ib) : max(ia, ib) + 1]
        candidates = [arc if ia < ib else arc[::-1]]
    else:
        ia = cycle.index(a)
        cycle = cycle[ia:] + cycle[:ia]
        ib = cycle.index(b)
        candidates = [cycle[: ib + 1], [cycle[0]] + cycle[ib:][::-1]]
    for arc in candidates:
        if all(det2(arc[i], arc[i + 1]) == 1 for i in range(len(arc) - 1)):
            return tuple(arc)
    raise ArithmeticError(f"no unimodular chain from {a} to {b}")


def _unimodular_chain(a: Vec, b: Vec) -> tuple[Vec, ...]:
    """Refine the cone spanned by a and b into determinant one cones.

    Repeated mediant insertion; if that somehow fails to terminate
    quickly the hull construction takes over, and the two agree whenever
    both apply.
    """
    chain = [a, b]
    inserted = 0
    i = 0
    while i + 1 < len(chain):
        d = det2(chain[i], chain[i + 1])
        if d == 1:
            i += 1
            continue
        if d < 1:
            raise ArithmeticError("chain lost its orientation")
        chain.insert(i + 1, primitive(vadd(chain[i], chain[i + 1])))
        inserted += 1
        if inserted > _MEDIANT_GUARD:
            return _hull_chain(a, b)
    return tuple(chain)


def toric_oracle(star: StarConfiguration) -> int:
    """Recompute the twelve of a star from an elementary subdivision.

    Every cone of the star's fan is refined into determinant one cones;
    on the refined fan each ray w_i satisfies w_{i-1} + w_{i+1} = c_i w_i
    and the oracle returns 3 m' + sum of (-c_i) over the m' refined rays.
    The value must agree with twelve_sum and is computed from entirely
    different data.
    """
    vs = star.vectors
    rays: list[Vec] = []
    for i in range(star.m):
        chain = _unimodular_chain(vs[i], vs[(i + 1) % star.m])
        rays.extend(chain[:-1])
    n = len(rays)
    total = 3 * n
    for i in range(n):
        w_prev, w, w_next = rays[i - 1], rays[i], rays[(i + 1) % n]
        s = vadd(w_prev, w_next)
        if det2(s, w) != 0:
            raise ArithmeticError(f"refined fan is not smooth at ray {w}")
        c = s[0] // w[0] if w[0] != 0 else s[1] // w[1]
        if vscale(c, w) != s:
            raise ArithmeticError(f"self intersection at ray {w} is not integral")
        total -= c
    return total


# ---------------------------------------------------------------------------
# reflexive polygons
# ---------------------------------------------------------------------------

def _as_polygon(P) -> LatticePolytope:
    if isinstance(P, ReflexivePolygon):
        return P.polytope
    poly = P if isinstance(P, LatticePolytope) else LatticePolytope(P)
    if poly.ambient_dim != 2 or poly.dim != 2:
        raise ValueError("expected a two dimensional lattice polygon")
    return poly


def is_reflexive(P) -> bool:
    """Whether a polygon has a unique interior point at lattice distance
    one from every edge.

    Equivalently, after translating the interior point to the origin each
    consecutive vertex pair a, b satisfies det(a, b) = content(b - a), so
    the polar dual is again a lattice polygon.
    """
    poly = _as_polygon(P)
    interior = poly.interior_lattice_points()
    if len(interior) != 1:
        return False
    c = interior[0]
    vs = [vsub(v, c) for v in poly.vertices]
    return all(
        det2(vs[i], vs[(i + 1) % len(vs)]) == content(vsub(vs[(i + 1) % len(vs)], vs[i]))
        for i in range(len(vs))
    )


@dataclass(frozen=True)
class ReflexivePolygon:
    """A polygon with a unique interior lattice point, stored centered.

    Construction translates the interior point to the origin and rejects
    anything that is not reflexive. The vertex cycle of a reflexive
    polygon is a star configuration, which ties the twelve identity to
    the polygon's corner and edge data.
    """

    polytope: LatticePolytope
    name: str = field(default="", compare=False)

    def __init__(self, P, name: str = ""):
        poly = P if isinstance(P, LatticePolytope) else LatticePolytope(P)
        if poly.ambient_dim != 2 or poly.dim != 2:
            raise ValueError("a reflexive polygon lives in the plane")
        interior = poly.interior_lattice_points()
        if len(interior) != 1:
            raise ValueError(
                f"polygon has {len(interior)} interior points instead of one"
            )
        if interior[0] != (0, 0):
            poly = poly.translate(vneg(interior[0]))
        if not is_reflexive(poly):
            raise ValueError("polygon's dual is not a lattice polygon")
        object.__setattr__(self, "polytope", poly)
        object.__setattr__(self, "name", name)

    @property
    def vertices(self) -> tuple[Vec, ...]:
        return self.polytope.vertices

    @property
    def m(self) -> int:
        return len(self.vertices)

    def star(self) -> StarConfiguration:
        return StarConfiguration(self.vertices)

    def dual(self) -> "ReflexivePolygon":
        """Polar dual, the polygon of u with <u, v> >= -1 on all vertices.

        Its vertices are the negated primitive outward normals of the
        edges, and dualizing twice gives back the same polygon.
        """
        vs = self.vertices
        duals = []
        for i in range(self.m):
            d = vsub(vs[(i + 1) % self.m], vs[i])
            n = primitive((d[1], -d[0]))
            duals.append(vneg(n))
        return ReflexivePolygon(duals)

    def edge_lengths(self) -> tuple[int, ...]:
        """Lattice length of each edge, following the vertex cycle."""
        vs = self.vertices
        return tuple(
            affine_length(vs[i], vs[(i + 1) % self.m]) for i in range(self.m)
        )

    def vertex_orders(self) -> tuple[int, ...]:
        """Corner determinant at each vertex, all positive by convexity."""
        return self.star().orders

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"ReflexivePolygon({list(self.vertices)!r}{tag})"


def dual_polygon(P) -> ReflexivePolygon:
    """Polar dual of a reflexive polygon; raises if P is not reflexive."""
    if isinstance(P, ReflexivePolygon):
        return P.dual()
    return ReflexivePolygon(_as_polygon(P)).dual()


def vertex_orders(P) -> tuple[int, ...]:
    """Corner determinants of a reflexive polygon, in vertex cycle order."""
    if isinstance(P, ReflexivePolygon):
        return P.vertex_orders()
    return ReflexivePolygon(_as_polygon(P)).vertex_orders()


def edge_lengths(P) -> tuple[int, ...]:
    """Lattice edge lengths of a plane polygon, in vertex cycle order."""
    poly = _as_polygon(P)
    vs = poly.vertices
    return tuple(
        affine_length(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))
    )


# ---------------------------------------------------------------------------
# unimodular canonical form
# ---------------------------------------------------------------------------

_GENERATORS = (
    ((0, -1), (1, 0)),
    ((1, 1), (0, 1)),
    ((1, -1), (0, 1)),
    ((0, 1), (1, 0)),
)

_canonical_cache: dict[tuple[Vec, ...], tuple[Vec, ...]] = {}


def _cyclic_tuple(points: Sequence[Vec]) -> tuple[Vec, ...]:
    """Vertex tuple of the hull, counterclockwise from the smallest."""
    return LatticePolytope(points).vertices


def _apply_generator(g, state) -> tuple[Vec, ...]:
    return _cyclic_tuple(
        [(g[0][0] * x + g[0][1] * y, g[1][0] * x + g[1][1] * y) for x, y in state]
    )


def _descend(state: tuple[Vec, ...]) -> tuple[Vec, ...]:
    """Greedy unimodular shrinking of a vertex tuple.

    Follows generator moves while the total coordinate size strictly
    drops, so arbitrarily sheared input reaches a small box before the
    exhaustive search takes over.
    """
    def weight(st):
        return (sum(abs(x) for v in st for x in v), st)

    current = state
    while True:
        best = min(
            (_apply_generator(g, current) for g in _GENERATORS),
            key=weight,
            default=current,
        )
        if weight(best) >= weight(current):
            return current
        current = best


def _canonical_key(state: tuple[Vec, ...]):
    return (
        max(abs(x) for v in state for x in v),
        sum(abs(x) for v in state for x in v),
        state,
    )


def canonical_form(P) -> tuple[Vec, ...]:
    """Distinguished representative of a polygon's unimodular orbit.

    The vertex tuple is first shrunk greedily, then a breadth first
    search walks all images under elementary unimodular moves inside a
    box slightly larger than the shrunk input, and the visited tuple of
    smallest coordinate size (ties broken lexicographically) is
    returned. Keying on size keeps the choice independent of how large
    the box had to be. Polygons are unimodularly equivalent exactly when
    their canonical forms agree, a fact the test suite probes with
    random unimodular maps.
    """
    start = _descend(_cyclic_tuple(_as_polygon(P).vertices))
    cached = _canonical_cache.get(start)
    if cached is not None:
        return cached
    bound = max(3, max(abs(x) for v in start for x in v)) + 2
    seen = {start}
    queue = [start]
    best = start
    while queue:
        state = queue.pop()
        if _canonical_key(state) < _canonical_key(best):
            best = state
        for g in _GENERATORS:
            nxt = _apply_generator(g, state)
            if any(abs(x) > bound or abs(y) > bound for x, y in nxt):
                continue
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    for state in seen:
        _canonical_cache[state] = best
    return best


# ---------------------------------------------------------------------------
# the sixteen reflexive polygons
# ---------------------------------------------------------------------------

_ALIASES = {
    "p2": ((1, 0), (0, 1), (-1, -1)),
    "p2-dual": ((-1, -1), (2, -1), (-1, 2)),
    "p1xp1": ((1, 0), (0, 1), (-1, 0), (0, -1)),
    "square": ((1, 1), (-1, 1), (-1, -1), (1, -1)),
    "f1": ((1, 0), (0, 1), (-1, 1), (0, -1)),
    "hexagon": ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)),
}


def _box_primitive_points(r: int) -> list[Vec]:
    return [
        (x, y)
        for x in range(-r, r + 1)
        for y in range(-r, r + 1)
        if (x, y) != (0, 0) and content((x, y)) == 1
    ]


def _enumerate_reflexive_in_box(r: int) -> list[tuple[Vec, ...]]:
    """All reflexive polygons with vertices in the box, as vertex cycles.

    A convex counterclockwise cycle of primitive points bounds a
    reflexive polygon exactly when every consecutive determinant equals
    the content of the difference, so the search walks cycles along such
    pairs, keeps the turning strictly left, and closes after one full
    turn. Each polygon appears once, started at its smallest vertex.
    """
    pts = _box_primitive_points(r)
    arcs: dict[Vec, list[Vec]] = {a: [] for a in pts}
    for a in pts:
        for b in pts:
            if b != a and det2(a, b) == content(vsub(b, a)):
                arcs[a].append(b)
    found: list[tuple[Vec, ...]] = []

    def extend(path: list[Vec], turned: Fraction) -> None:
        s, last = path[0], path[-1]
        d_last = vsub(last, path[-2])
        for nxt in arcs[last]:
            if nxt == s and len(path) >= 3:
                d_close = vsub(s, last)
                d_first = vsub(path[1], s)
                t1 = turn_fraction(d_last, d_close)
                t2 = turn_fraction(d_close, d_first)
                if t1 > 0 and t2 > 0 and turned + t1 + t2 == 4:
                    found.append(tuple(path))
                continue
            if nxt <= s or nxt in path:
                continue
            t = turn_fraction(d_last, vsub(nxt, last))
            if t <= 0 or turned + t >= 4:
                continue
            path.append(nxt)
            extend(path, turned + t)
            path.pop()

    for s in pts:
        for first in arcs[s]:
            if first > s:
                extend([s, first], Fraction(0))
    return found


@lru_cache(maxsize=1)
def reflexive_catalog() -> tuple[ReflexivePolygon, ...]:
    """The sixteen reflexive polygons up to unimodular equivalence.

    Enumerates every reflexive polygon with vertices in the box [-3, 3]^2,
    reduces modulo unimodular maps via canonical forms, and returns one
    centered representative per class, ordered by vertex count and then
    by canonical vertex tuple. Names are r0 through r15 in that order;
    a few classes carry conventional aliases on top.
    """
    classes: dict[tuple[Vec, ...], None] = {}
    for cycle in _enumerate_reflexive_in_box(3):
        classes.setdefault(canonical_form(cycle), None)
    ordered = sorted(classes, key=lambda c: (len(c), c))
    if len(ordered) != 16:
        raise ArithmeticError(
            f"catalog enumeration found {len(ordered)} classes instead of 16"
        )
    entries = []
    for i, verts in enumerate(ordered):
        entry = ReflexivePolygon(verts, name=f"r{i}")
        if not is_reflexive(entry.polytope):
            raise ArithmeticError(f"catalog entry {i} failed the reflexivity check")
        entries.append(entry)
    return tuple(entries)


@lru_cache(maxsize=1)
def _alias_index() -> dict[str, int]:
    catalog = reflexive_catalog()
    by_canon = {canonical_form(e.polytope): i for i, e in enumerate(catalog)}
    out = {e.name: i for i, e in enumerate(catalog)}
    for alias, verts in _ALIASES.items():
        out[alias] = by_canon[canonical_form(verts)]
    return out


def catalog_entry(key) -> ReflexivePolygon:
    """Look up a catalog polygon by index or by name or alias."""
    catalog = reflexive_catalog()
    if isinstance(key, int):
        if not 0 <= key < len(catalog):
            raise KeyError(f"catalog index {key} out of range")
        return catalog[key]
    index = _alias_index().get(str(key).lower())
    if index is None:
        raise KeyError(f"unknown catalog polygon {key!r}")
    return catalog[index]


def catalog_class(P) -> int:
    """Index of the catalog class a reflexive polygon belongs to."""
    poly = P.polytope if isinstance(P, ReflexivePolygon) else ReflexivePolygon(P).polytope
    canon = canonical_form(poly)
    for i, entry in enumerate(reflexive_catalog()):
        if canonical_form(entry.polytope) == canon:
            return i
    raise ArithmeticError("reflexive polygon missing from the catalog")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def polygon_to_json(P) -> str:
    """Serialize a polygon as {"vertices": [[x, y], ...]}."""
    poly = _as_polygon(P)
    return json.dumps({"vertices": [list(v) for v in poly.vertices]}, sort_keys=True)


def polygon_from_json(text: str):
    """Parse {"vertices": [[x, y], ...]} into a polytope.

    Raises ValueError naming the defect for malformed input.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"polygon JSON does not parse: {e}") from None
    if not isinstance(data, dict) or "vertices" not in data:
        raise ValueError('polygon JSON needs a "vertices" key')
    verts = data["vertices"]
    if not isinstance(verts, list) or not verts:
        raise ValueError('"vertices" must be a non empty list')
    for i, v in enumerate(verts):
        if (
            not isinstance(v, list)
            or len(v) != 2
            or not all(isinstance(x, int) for x in v)
        ):
            raise ValueError(f"vertex {i} is not a pair of integers")
    return LatticePolytope(verts)
