"""Integral affine complexes glued from lattice polytopes.

A complex is a finite collection of full dimensional lattice polytopes,
each carrying its own coordinates, identified along facets by unimodular
affine maps. Every identified vertex carries a fan, and each cell corner
at the vertex records which ray every primitive edge direction occupies;
the linear chart of the corner is solved exactly from that assignment.
Where neighbouring charts fail to agree the complex acquires a
discriminant, and all discriminant data is recomputed from monodromy
and checked against the stored labels rather than trusted.

Positions on the discriminant are combinatorial: strata sit at exact
barycentric positions on faces and never touch the vertices. All
arithmetic is over the integers and rationals, so every check is exact.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .lattice import (
    IntMat,
    LatticePolytope,
    UnimodularMap,
    Vec,
    content,
    det2,
    polytope_product,
    primitive,
    qmat,
    qmat_det,
    qmat_inv,
    qmat_is_integral,
    qmat_mul,
    qmat_to_int,
    qrank,
    solve_linear_map,
    turn_fraction,
    vdot,
    vsub,
)

QVec = tuple[Fraction, ...]
Site = tuple[int, int]

A_EDGE = "A-edge"


def _eye(n: int) -> IntMat:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _mat_vec(m: Sequence[Sequence[int]], v: Sequence) -> tuple:
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in m)


def _imat_mul(a, b) -> IntMat:
    return qmat_to_int(qmat_mul(qmat(a), qmat(b)))


def _imat_inv(a) -> IntMat:
    return qmat_to_int(qmat_inv(a))


def _qpoint(p: Sequence) -> QVec:
    return tuple(Fraction(x) for x in p)


def _apply_affine(f: UnimodularMap, p: Sequence) -> QVec:
    return tuple(
        a + b for a, b in zip(_mat_vec(f.linear, _qpoint(p)), f.translation)
    )


def _fmt_point(p: Sequence) -> str:
    return "(" + ", ".join(str(x) for x in p) + ")"


# ---------------------------------------------------------------------------
# faces of a single cell
# ---------------------------------------------------------------------------

def facet_index_tuples(cell: LatticePolytope) -> tuple[tuple[int, ...], ...]:
    """Vertex index tuples of the codimension one faces of a cell.

    For a polygon these are the directed edges of the counterclockwise
    vertex cycle, so each facet carries an orientation with the cell on
    its left. For a solid cell they follow the facet cycles of the
    polytope.
    """
    if cell.dim == 1:
        return ((0,), (1,))
    if cell.dim == 2:
        n = len(cell.vertices)
        return tuple((i, (i + 1) % n) for i in range(n))
    if cell.dim == 3:
        idx = {v: i for i, v in enumerate(cell.vertices)}
        return tuple(tuple(idx[v] for v in cyc) for cyc in cell.facet_cycles())
    raise ValueError("cells must have dimension between one and three")


def cell_faces(cell: LatticePolytope) -> dict[int, tuple[frozenset[int], ...]]:
    """All faces of a cell by dimension, as frozensets of vertex indices."""
    idx = {v: i for i, v in enumerate(cell.vertices)}
    faces: dict[int, tuple[frozenset[int], ...]] = {
        0: tuple(frozenset([i]) for i in range(len(cell.vertices)))
    }
    if cell.dim >= 1:
        faces[1] = tuple(frozenset((idx[a], idx[b])) for a, b in cell.edges())
    if cell.dim == 2:
        faces[2] = (frozenset(range(len(cell.vertices))),)
    elif cell.dim == 3:
        faces[2] = tuple(
            frozenset(idx[v] for v in cyc) for cyc in cell.facet_cycles()
        )
        faces[3] = (frozenset(range(len(cell.vertices))),)
    return faces


# ---------------------------------------------------------------------------
# the pieces of a complex
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gluing:
    """Identification of a facet of one cell with a facet of another.

    The map carries coordinates of cell_a onto coordinates of cell_b and
    must send the first facet exactly onto the second. The reverse
    identification is implied, so each matched pair is stored once.
    cell_a may equal cell_b, which glues a cell to itself along two of
    its own facets; a facet is never glued to itself.
    """

    cell_a: int
    facet_a: int
    cell_b: int
    facet_b: int
    map: UnimodularMap


@dataclass(frozen=True)
class FanStructure:
    """Fan of an identified vertex with chart data for each incident corner.

    rays are primitive vectors in the fan's own coordinates, and cones
    lists the maximal cones as tuples of ray indices; plane cones are
    ordered pairs turning counterclockwise. members records, for every
    (cell, vertex index) identified to this vertex, the ray occupied by
    each primitive edge direction of the cell at that corner. A fan may
    list cones that no corner occupies, which completes the picture
    around a boundary vertex, but an interior vertex must be tiled by
    its corners exactly.
    """

    rays: tuple[Vec, ...]
    cones: tuple[tuple[int, ...], ...]
    members: tuple[tuple[Site, tuple[tuple[Vec, int], ...]], ...]

    def member_map(self) -> dict[Site, dict[Vec, int]]:
        return {site: dict(pairs) for site, pairs in self.members}


@dataclass(frozen=True)
class DiscriminantLocus:
    """One stratum of the discriminant, anchored to a face of one cell.

    face lists vertex indices of the carrying face in the cell's own
    indexing, and each point is a tuple of barycentric weights over
    those vertices. A plane stratum is a single point on an interior
    edge with a signed multiplicity; a spatial stratum is a segment in
    an interior two dimensional face, stored by its two endpoints, with
    a positive multiplicity. Vertices of the discriminant graph are not
    stored: they are derived from how the strata meet.
    """

    cell: int
    face: tuple[int, ...]
    points: tuple[tuple[Fraction, ...], ...]
    multiplicity: int
    local_type: str = A_EDGE


@dataclass(frozen=True)
class MultivaluedPL:
    """Integer ray values of a piecewise linear potential, one tuple per fan.

    Values are taken modulo linear functions, so only the bending is
    meaningful. Validation solves a gradient on every maximal cone and
    requires strict convexity across each wall shared by two cones.
    """

    values: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ChamberPath:
    """Closed walk through maximal cells, crossing at shared vertices.

    crossings[i] joins cells[i] to cells[i + 1] (indices cyclic) and
    names the pivot vertex on each side: a vertex index in the cell
    being left, then one in the cell being entered; the two must be
    identified in the complex. Since the walk pivots on vertices and
    the discriminant never touches a vertex, a chamber path always
    stays clear of the discriminant.
    """

    cells: tuple[int, ...]
    crossings: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class TropicalComplex:
    """Maximal cells glued along facets, with fans, labels and potential.

    boundary flags the unglued facets as (cell, facet index) pairs;
    when it is empty the complex claims to be closed, and validation
    then checks every facet is matched. The discriminant tuple stores
    the A type strata; the graph structure they form is derived, never
    stored. pl is an optional multivalued potential on the fans.
    """

    cells: tuple[LatticePolytope, ...]
    gluings: tuple[Gluing, ...] = ()
    fans: tuple[FanStructure, ...] = ()
    discriminant: tuple[DiscriminantLocus, ...] = ()
    pl: MultivaluedPL | None = None
    boundary: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "gluings", tuple(self.gluings))
        object.__setattr__(self, "fans", tuple(self.fans))
        object.__setattr__(self, "discriminant", tuple(self.discriminant))
        object.__setattr__(
            self, "boundary", frozenset(tuple(b) for b in self.boundary)
        )
        object.__setattr__(self, "_cache", {})

    @property
    def dim(self) -> int:
        return self.cells[0].ambient_dim if self.cells else 0


# ---------------------------------------------------------------------------
# derived combinatorics, cached per complex
# ---------------------------------------------------------------------------

def _cache(c: TropicalComplex) -> dict:
    return c._cache  # set in __post_init__


def _facet_tuples(c: TropicalComplex) -> tuple[tuple[tuple[int, ...], ...], ...]:
    cache = _cache(c)
    if "facets" not in cache:
        cache["facets"] = tuple(facet_index_tuples(cell) for cell in c.cells)
    return cache["facets"]


def _try_gluing_bijection(
    c: TropicalComplex, g: Gluing
) -> tuple[dict[int, int] | None, str | None]:
    """Vertex index bijection facet_a onto facet_b, or an explanation."""
    cell_a, cell_b = c.cells[g.cell_a], c.cells[g.cell_b]
    fa = _facet_tuples(c)[g.cell_a][g.facet_a]
    fb = _facet_tuples(c)[g.cell_b][g.facet_b]
    lookup = {v: j for j, v in enumerate(cell_b.vertices)}
    target = set(fb)
    bij: dict[int, int] = {}
    for i in fa:
        image = g.map.apply(cell_a.vertices[i])
        j = lookup.get(image)
        if j is None or j not in target:
            return None, (
                f"sends vertex {_fmt_point(cell_a.vertices[i])} of facet "
                f"{g.facet_a} of cell {g.cell_a} to {_fmt_point(image)}, "
                f"which is not a vertex of facet {g.facet_b} of cell {g.cell_b}"
            )
        bij[i] = j
    if len(set(bij.values())) != len(target):
        return None, (
            f"does not map facet {g.facet_a} of cell {g.cell_a} onto facet "
            f"{g.facet_b} of cell {g.cell_b} bijectively"
        )
    return bij, None


def _gluing_bijections(c: TropicalComplex) -> tuple[dict[int, int], ...]:
    cache = _cache(c)
    if "bijections" not in cache:
        out = []
        for gi, g in enumerate(c.gluings):
            bij, problem = _try_gluing_bijection(c, g)
            if problem is not None:
                raise ValueError(f"gluing {gi} {problem}")
            out.append(bij)
        cache["bijections"] = tuple(out)
    return cache["bijections"]


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx


def _vertex_classes(
    c: TropicalComplex,
) -> tuple[tuple[tuple[Site, ...], ...], dict[Site, int]]:
    cache = _cache(c)
    if "classes" not in cache:
        uf = _UnionFind()
        for ci, cell in enumerate(c.cells):
            for vi in range(len(cell.vertices)):
                uf.add((ci, vi))
        for g, bij in zip(c.gluings, _gluing_bijections(c)):
            for i, j in bij.items():
                uf.union((g.cell_a, i), (g.cell_b, j))
        groups: dict[Site, list[Site]] = {}
        for site in uf.parent:
            groups.setdefault(uf.find(site), []).append(site)
        classes = tuple(
            tuple(sorted(groups[root])) for root in sorted(groups)
        )
        site_to_class = {
            site: k for k, cls in enumerate(classes) for site in cls
        }
        cache["classes"] = (classes, site_to_class)
    return cache["classes"]


def vertex_classes(c: TropicalComplex) -> tuple[tuple[Site, ...], ...]:
    """Identified vertices as sorted tuples of (cell, vertex index) sites."""
    return _vertex_classes(c)[0]


def _facet_lookup(c: TropicalComplex) -> dict[tuple[int, int], tuple[int, str]]:
    """Map each glued (cell, facet) to its gluing index and side."""
    cache = _cache(c)
    if "facet_lookup" not in cache:
        lookup: dict[tuple[int, int], tuple[int, str]] = {}
        for gi, g in enumerate(c.gluings):
            lookup[(g.cell_a, g.facet_a)] = (gi, "a")
            lookup[(g.cell_b, g.facet_b)] = (gi, "b")
        cache["facet_lookup"] = lookup
    return cache["facet_lookup"]


def _boundary_sites(c: TropicalComplex) -> frozenset[Site]:
    """Vertices lying on a flagged boundary facet."""
    cache = _cache(c)
    if "boundary_sites" not in cache:
        out = set()
        for ci, fi in c.boundary:
            for vi in _facet_tuples(c)[ci][fi]:
                out.add((ci, vi))
        cache["boundary_sites"] = frozenset(out)
    return cache["boundary_sites"]


def _fan_data(c: TropicalComplex) -> dict[Site, tuple[int, IntMat, IntMat]]:
    """Per corner: fan index, chart to fan coordinates, and its inverse.

    Only available once validation has succeeded; operations that need
    charts call _ensure_valid first.
    """
    return _cache(c)["fan_data"]


def corner_chart(c: TropicalComplex, cell: int, vertex: int) -> IntMat:
    """Linear chart of a cell corner into the fan coordinates of its vertex."""
    _ensure_valid(c)
    return _fan_data(c)[(cell, vertex)][1]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _check_cells(c: TropicalComplex) -> list[str]:
    problems = []
    dims = set()
    for ci, cell in enumerate(c.cells):
        dims.add(cell.ambient_dim)
        if cell.ambient_dim not in (2, 3):
            problems.append(f"cell {ci} has unsupported ambient dimension")
        elif cell.dim != cell.ambient_dim:
            problems.append(
                f"cell {ci} is not full dimensional in its coordinates"
            )
    if len(dims) > 1:
        problems.append("cells live in different ambient dimensions")
    return problems


def _check_gluings(c: TropicalComplex) -> list[str]:
    problems = []
    seen: dict[tuple[int, int], int] = {}
    for gi, g in enumerate(c.gluings):
        ok = True
        for ci, fi, side in (
            (g.cell_a, g.facet_a, "a"),
            (g.cell_b, g.facet_b, "b"),
        ):
            if not 0 <= ci < len(c.cells):
                problems.append(f"gluing {gi} names missing cell {ci}")
                ok = False
            elif not 0 <= fi < len(_facet_tuples(c)[ci]):
                problems.append(
                    f"gluing {gi} names missing facet {fi} of cell {ci}"
                )
                ok = False
        if not ok:
            continue
        if (g.cell_a, g.facet_a) == (g.cell_b, g.facet_b):
            problems.append(f"gluing {gi} glues a facet to itself")
            continue
        if g.map.dim != c.cells[g.cell_a].ambient_dim:
            problems.append(f"gluing {gi} has a map of the wrong dimension")
            continue
        bij, problem = _try_gluing_bijection(c, g)
        if bij is None:
            problems.append(f"gluing {gi} {problem}")
            continue
        for key in ((g.cell_a, g.facet_a), (g.cell_b, g.facet_b)):
            if key in seen:
                problems.append(
                    f"facet {key[1]} of cell {key[0]} appears in gluings "
                    f"{seen[key]} and {gi}"
                )
            else:
                seen[key] = gi
    for ci, fi in sorted(c.boundary):
        if not 0 <= ci < len(c.cells) or not 0 <= fi < len(_facet_tuples(c)[ci]):
            problems.append(f"boundary flag names missing facet ({ci}, {fi})")
        elif (ci, fi) in seen:
            problems.append(
                f"facet {fi} of cell {ci} is flagged boundary but glued "
                f"in gluing {seen[(ci, fi)]}"
            )
    for ci in range(len(c.cells)):
        for fi in range(len(_facet_tuples(c)[ci])):
            if (ci, fi) not in seen and (ci, fi) not in c.boundary:
                problems.append(
                    f"facet {fi} of cell {ci} is neither glued nor "
                    f"flagged as boundary"
                )
    return problems


def _cone_walls_3d(
    rays: tuple[Vec, ...], cone: tuple[int, ...], label: str
) -> tuple[list[frozenset[int]], list[str]]:
    """Two dimensional walls of a pointed solid cone, as ray index sets."""
    problems = []
    pts = [(0, 0, 0)] + [rays[i] for i in cone]
    hull = LatticePolytope(pts)
    if hull.dim != 3:
        return [], [f"{label} is not full dimensional"]
    vset = set(hull.vertices)
    if (0, 0, 0) not in vset:
        return [], [f"{label} is not pointed"]
    for i in cone:
        if rays[i] not in vset:
            problems.append(f"ray {_fmt_point(rays[i])} is not extremal in {label}")
    walls = []
    for normal, offset in hull.facet_planes():
        if offset != 0:
            continue
        wall = frozenset(i for i in cone if vdot(normal, rays[i]) == 0)
        walls.append(wall)
    return walls, problems


def _check_fan_cones(
    fan: FanStructure, interior: bool, dim: int, label: str
) -> list[str]:
    """Shape of the fan itself: ray sanity, cone sanity, global closure."""
    problems = []
    seen_rays = set()
    for r in fan.rays:
        if len(r) != dim or all(x == 0 for x in r):
            problems.append(f"{label} has a zero or misshapen ray")
            return problems
        if primitive(r) != r:
            problems.append(f"{label} has non primitive ray {_fmt_point(r)}")
        if r in seen_rays:
            problems.append(f"{label} repeats ray {_fmt_point(r)}")
        seen_rays.add(r)
    used = set()
    for cone in fan.cones:
        if len(set(cone)) != len(cone) or any(
            not 0 <= i < len(fan.rays) for i in cone
        ):
            problems.append(f"{label} has a cone with bad ray indices")
            return problems
        used.update(cone)
    if used != set(range(len(fan.rays))):
        problems.append(f"{label} has rays that lie in no cone")
    if problems:
        return problems

    if dim == 2:
        for cone in fan.cones:
            if len(cone) != 2:
                problems.append(f"{label} has a plane cone without two rays")
                return problems
            if det2(fan.rays[cone[0]], fan.rays[cone[1]]) <= 0:
                problems.append(
                    f"{label} has cone ({_fmt_point(fan.rays[cone[0]])}, "
                    f"{_fmt_point(fan.rays[cone[1]])}) that does not turn "
                    f"counterclockwise"
                )
        if problems:
            return problems
        starts: dict[int, int] = {}
        ends: dict[int, int] = {}
        for k, cone in enumerate(fan.cones):
            if cone[0] in starts or cone[1] in ends:
                problems.append(f"{label} has overlapping cones")
                return problems
            starts[cone[0]] = k
            ends[cone[1]] = k
        heads = [k for k, cone in enumerate(fan.cones) if cone[0] not in ends]
        if interior and heads:
            problems.append(f"{label} is not complete around an interior vertex")
            return problems
        if len(heads) > 1:
            problems.append(f"{label} breaks into several chains")
            return problems
        start = heads[0] if heads else 0
        k = start
        turn = Fraction(0)
        visited = 0
        for _ in range(len(fan.cones)):
            cone = fan.cones[k]
            turn += turn_fraction(fan.rays[cone[0]], fan.rays[cone[1]])
            visited += 1
            k = starts.get(cone[1], -1)
            if k < 0:
                break
        if visited != len(fan.cones):
            problems.append(f"{label} breaks into several chains")
        elif heads:
            if turn >= 4:
                problems.append(f"{label} does not chain into a single sector")
        elif k != start or turn != 4:
            problems.append(f"{label} does not close up with winding one")
    else:
        wall_count: dict[frozenset[int], int] = {}
        for k, cone in enumerate(fan.cones):
            if len(cone) < 3:
                problems.append(f"{label} has a solid cone without three rays")
                return problems
            walls, cone_problems = _cone_walls_3d(
                fan.rays, cone, f"cone {k} of {label}"
            )
            problems.extend(cone_problems)
            for wall in walls:
                wall_count[wall] = wall_count.get(wall, 0) + 1
        if problems:
            return problems
        for wall, count in sorted(wall_count.items(), key=lambda kv: sorted(kv[0])):
            if count > 2:
                problems.append(
                    f"{label} has a wall shared by {count} cones"
                )
            elif count == 1 and interior:
                rays = ", ".join(_fmt_point(fan.rays[i]) for i in sorted(wall))
                problems.append(
                    f"{label} has unmatched wall [{rays}] at an interior vertex"
                )
    return problems


def _check_fans(c: TropicalComplex) -> list[str]:
    problems = []
    classes, site_to_class = _vertex_classes(c)
    dim = c.dim
    boundary_sites = _boundary_sites(c)
    fan_data: dict[Site, tuple[int, IntMat, IntMat]] = {}

    owner: dict[Site, int] = {}
    fan_class: list[int | None] = []
    for fi, fan in enumerate(c.fans):
        ks = set()
        for site, _ in fan.members:
            if not (
                0 <= site[0] < len(c.cells)
                and 0 <= site[1] < len(c.cells[site[0]].vertices)
            ):
                problems.append(f"fan {fi} names missing vertex {site}")
                continue
            if site in owner:
                problems.append(
                    f"vertex {site} appears in fans {owner[site]} and {fi}"
                )
            owner[site] = fi
            ks.add(site_to_class[site])
        if len(ks) != 1:
            problems.append(f"fan {fi} does not cover exactly one vertex class")
            fan_class.append(None)
        else:
            fan_class.append(ks.pop())
    class_owner: dict[int, int] = {}
    for fi, k in enumerate(fan_class):
        if k is None:
            continue
        if k in class_owner:
            problems.append(
                f"fans {class_owner[k]} and {fi} both cover the vertex "
                f"class of {classes[k][0]}"
            )
        else:
            class_owner[k] = fi
    for k, cls in enumerate(classes):
        for site in cls:
            if site not in owner:
                problems.append(
                    f"vertex {site} is not assigned to any fan"
                )
                break
    if problems:
        return problems

    for fi, fan in enumerate(c.fans):
        k = fan_class[fi]
        interior = all(site not in boundary_sites for site in classes[k])
        label = f"fan {fi}"
        problems.extend(_check_fan_cones(fan, interior, dim, label))
        if problems:
            continue
        cone_sets = [frozenset(cone) for cone in fan.cones]
        occupied: dict[int, Site] = {}
        for site, pairs in fan.members:
            ci, vi = site
            cell = c.cells[ci]
            v = cell.vertices[vi]
            tangents = cell.vertex_tangents(v)
            assigned = {t for t, _ in pairs}
            if assigned != set(tangents):
                problems.append(
                    f"fan {fi} does not assign exactly the edge directions "
                    f"of cell {ci} at vertex {_fmt_point(v)}"
                )
                continue
            indices = [ri for _, ri in pairs]
            if len(set(indices)) != len(indices) or any(
                not 0 <= ri < len(fan.rays) for ri in indices
            ):
                problems.append(
                    f"fan {fi} assigns cell {ci} vertex {_fmt_point(v)} "
                    f"to repeated or missing rays"
                )
                continue
            try:
                chart_q = solve_linear_map(
                    [(t, fan.rays[ri]) for t, ri in pairs], dim
                )
            except ValueError as err:
                problems.append(
                    f"no chart realises the ray assignment of cell {ci} "
                    f"at vertex {_fmt_point(v)} in fan {fi}: {err}"
                )
                continue
            if not qmat_is_integral(chart_q) or abs(qmat_det(chart_q)) != 1:
                problems.append(
                    f"the chart of cell {ci} at vertex {_fmt_point(v)} in "
                    f"fan {fi} is not a lattice isomorphism"
                )
                continue
            image = frozenset(indices)
            matches = [k2 for k2, cs in enumerate(cone_sets) if cs == image]
            if len(matches) != 1:
                problems.append(
                    f"the corner of cell {ci} at vertex {_fmt_point(v)} does "
                    f"not occupy a single maximal cone of fan {fi}"
                )
                continue
            if matches[0] in occupied:
                problems.append(
                    f"two corners occupy cone {matches[0]} of fan {fi}"
                )
                continue
            occupied[matches[0]] = site
            chart = qmat_to_int(chart_q)
            fan_data[site] = (fi, chart, _imat_inv(chart))
        if interior and len(occupied) != len(fan.cones):
            problems.append(
                f"fan {fi} has cones not occupied by any corner around an "
                f"interior vertex"
            )
    if problems:
        return problems

    for gi, (g, bij) in enumerate(zip(c.gluings, _gluing_bijections(c))):
        lin = g.map.linear
        facet_pts = [c.cells[g.cell_a].vertices[i] for i in _facet_tuples(c)[g.cell_a][g.facet_a]]
        facet_poly = LatticePolytope(facet_pts)
        for i, j in bij.items():
            site_a, site_b = (g.cell_a, i), (g.cell_b, j)
            fa, fb = _fan_data_site(fan_data, site_a), _fan_data_site(fan_data, site_b)
            if fa is None or fb is None:
                continue
            assign_a = dict(dict(c.fans[fa[0]].members)[site_a])
            assign_b = dict(dict(c.fans[fb[0]].members)[site_b])
            v = c.cells[g.cell_a].vertices[i]
            for t in facet_poly.vertex_tangents(v):
                t_img = primitive(_mat_vec(lin, t))
                if assign_a.get(t) != assign_b.get(t_img):
                    problems.append(
                        f"gluing {gi} transports edge direction "
                        f"{_fmt_point(t)} at vertex {_fmt_point(v)} of cell "
                        f"{g.cell_a} onto a different fan ray than the "
                        f"neighbouring corner assigns"
                    )
    if not problems:
        _cache(c)["fan_data"] = fan_data
    return problems


def _fan_data_site(fan_data, site):
    return fan_data.get(site)


def _cone_gradient(
    rays: Sequence[Vec], cone: Sequence[int], values: Sequence[int]
) -> QVec | None:
    """Linear functional matching the given ray values on one cone."""
    dim = len(rays[0])
    sel: list[int] = []
    for i in cone:
        if qrank([rays[j] for j in sel] + [rays[i]]) > len(sel):
            sel.append(i)
        if len(sel) == dim:
            break
    if len(sel) < dim:
        return None
    grad = _mat_vec(
        qmat_inv([rays[j] for j in sel]), [Fraction(values[j]) for j in sel]
    )
    for i in cone:
        if sum(g * x for g, x in zip(grad, rays[i])) != values[i]:
            return None
    return tuple(grad)


def _check_pl(c: TropicalComplex) -> list[str]:
    if c.pl is None:
        return []
    problems = []
    if len(c.pl.values) != len(c.fans):
        return ["potential values are not aligned with the fans"]
    for fi, (fan, values) in enumerate(zip(c.fans, c.pl.values)):
        if len(values) != len(fan.rays):
            problems.append(f"potential on fan {fi} has wrong value count")
            continue
        grads = []
        for k, cone in enumerate(fan.cones):
            grad = _cone_gradient(fan.rays, cone, values)
            if grad is None:
                problems.append(
                    f"potential on fan {fi} is not linear on cone {k}"
                )
            grads.append(grad)
        if any(g is None for g in grads):
            continue
        for k1 in range(len(fan.cones)):
            for k2 in range(k1 + 1, len(fan.cones)):
                shared = set(fan.cones[k1]) & set(fan.cones[k2])
                if len(shared) != c.dim - 1:
                    continue
                for src, dst in ((k1, k2), (k2, k1)):
                    for i in set(fan.cones[dst]) - shared:
                        extended = sum(
                            g * x for g, x in zip(grads[src], fan.rays[i])
                        )
                        if extended >= values[i]:
                            problems.append(
                                f"potential on fan {fi} is not strictly "
                                f"convex across the wall between cones "
                                f"{k1} and {k2}"
                            )
    return problems


def _locus_cartesian_points(c: TropicalComplex, locus: DiscriminantLocus) -> tuple[QVec, ...]:
    cell = c.cells[locus.cell]
    out = []
    for weights in locus.points:
        point = tuple(
            sum(
                Fraction(w) * Fraction(cell.vertices[i][k])
                for w, i in zip(weights, locus.face)
            )
            for k in range(cell.ambient_dim)
        )
        out.append(point)
    return tuple(out)


def _check_discriminant_structure(c: TropicalComplex) -> list[str]:
    problems = []
    dim = c.dim
    lookup = _facet_lookup(c)
    seen = set()
    for li, locus in enumerate(c.discriminant):
        label = f"discriminant stratum {li}"
        if locus.local_type != A_EDGE:
            problems.append(
                f"{label} has local type {locus.local_type!r}; only stored "
                f"{A_EDGE!r} strata are supported, vertex data is derived"
            )
            continue
        if not 0 <= locus.cell < len(c.cells):
            problems.append(f"{label} names missing cell {locus.cell}")
            continue
        facets = _facet_tuples(c)[locus.cell]
        matches = [fi for fi, f in enumerate(facets) if f == tuple(locus.face)]
        if len(matches) != 1:
            problems.append(
                f"{label} is not carried by a facet of cell {locus.cell} "
                f"in canonical order"
            )
            continue
        key = (locus.cell, matches[0])
        if key not in lookup:
            problems.append(
                f"{label} sits on boundary facet {matches[0]} of cell "
                f"{locus.cell}"
            )
            continue
        if locus.multiplicity == 0:
            problems.append(f"{label} has multiplicity zero")
        if dim == 3 and locus.multiplicity < 0:
            problems.append(f"{label} has a negative spatial multiplicity")
        expected_points = 1 if dim == 2 else 2
        if len(locus.points) != expected_points:
            problems.append(
                f"{label} stores {len(locus.points)} points, expected "
                f"{expected_points}"
            )
            continue
        bad = False
        for weights in locus.points:
            if len(weights) != len(locus.face) or sum(weights) != 1 or any(
                w < 0 for w in weights
            ):
                problems.append(f"{label} has malformed barycentric weights")
                bad = True
                break
        if bad:
            continue
        pts = _locus_cartesian_points(c, locus)
        cell = c.cells[locus.cell]
        face_poly = LatticePolytope([cell.vertices[i] for i in locus.face])
        for p in pts:
            if any(p == _qpoint(v) for v in cell.vertices):
                problems.append(f"{label} touches a vertex of the complex")
            elif dim == 2 and not face_poly.contains(p, strict=True):
                problems.append(f"{label} is not interior to its edge")
            elif dim == 3 and not face_poly.contains(p):
                problems.append(f"{label} leaves its carrying face")
        if dim == 3 and pts[0] == pts[1]:
            problems.append(f"{label} is a degenerate segment")
        normalized = (key, frozenset(pts))
        if normalized in seen:
            problems.append(f"{label} duplicates another stratum")
        seen.add(normalized)
    return problems


def validate(c: TropicalComplex) -> tuple[str, ...]:
    """All structural problems of a complex, empty when it is sound.

    Checks run in dependency layers: cells, then gluings and boundary
    flags, then fans and charts, then the potential and the stored
    discriminant strata. A failing layer hides the later ones, since
    those checks could not even be phrased. The empty complex is valid.
    Whether stored multiplicities agree with monodromy is checked by
    discriminant_graph, not here.
    """
    cache = _cache(c)
    if "validate" not in cache:
        problems = _check_cells(c)
        if not problems:
            problems = _check_gluings(c)
        if not problems:
            problems = _check_fans(c)
        if not problems:
            problems = _check_pl(c) + _check_discriminant_structure(c)
        cache["validate"] = tuple(problems)
    return cache["validate"]


def _ensure_valid(c: TropicalComplex) -> None:
    problems = validate(c)
    if problems:
        raise ValueError(
            "invalid complex: " + "; ".join(problems[:4])
            + ("; ..." if len(problems) > 4 else "")
        )


# ---------------------------------------------------------------------------
# monodromy
# ---------------------------------------------------------------------------

def monodromy(c: TropicalComplex, path: ChamberPath, base: int) -> UnimodularMap:
    """Linear holonomy of a closed chamber path, in base vertex fan coordinates.

    base indexes a vertex of the first cell of the path and the result
    is expressed in the fan coordinates of its vertex class, with zero
    translation part. A walk of n cells needs exactly n crossings to
    close up; anything else is rejected, as is a crossing whose two
    pivot vertices are not identified in the complex.
    """
    _ensure_valid(c)
    if not path.cells:
        raise ValueError("a chamber path needs at least one cell")
    n = len(path.cells)
    if len(path.crossings) != n:
        raise ValueError(
            f"path is not closed: {n} cells need {n} crossings, "
            f"got {len(path.crossings)}"
        )
    _, site_to_class = _vertex_classes(c)
    fan_data = _fan_data(c)
    for i, ci in enumerate(path.cells):
        if not 0 <= ci < len(c.cells):
            raise ValueError(f"path names missing cell {ci}")
    if not 0 <= base < len(c.cells[path.cells[0]].vertices):
        raise ValueError("base is not a vertex of the first cell")
    dim = c.dim
    total = qmat(_eye(dim))
    for i in range(n):
        ca, cb = path.cells[i], path.cells[(i + 1) % n]
        out_v, in_v = path.crossings[i]
        if not 0 <= out_v < len(c.cells[ca].vertices) or not 0 <= in_v < len(
            c.cells[cb].vertices
        ):
            raise ValueError(f"crossing {i} names a missing vertex")
        if site_to_class[(ca, out_v)] != site_to_class[(cb, in_v)]:
            raise ValueError(
                f"crossing {i} does not pivot on a vertex shared by cells "
                f"{ca} and {cb}"
            )
        factor = qmat_mul(qmat(fan_data[(cb, in_v)][2]), qmat(fan_data[(ca, out_v)][1]))
        total = qmat_mul(factor, total)
    chart = qmat(fan_data[(path.cells[0], base)][1])
    result = qmat_mul(qmat_mul(chart, total), qmat_inv(chart))
    return UnimodularMap(qmat_to_int(result), (0,) * dim)


def edge_multiplicity_from_monodromy(m: UnimodularMap | Sequence[Sequence[int]]) -> int:
    """Shear size of an A type monodromy matrix.

    The identity gives zero. In the plane the result is signed by the
    convention that positive shears push along the counterclockwise
    loop; in space it is the positive gcd of the entries of M - I.
    Raises ValueError("not an A-type monodromy") for anything that is
    not a determinant one transvection fixing a hyperplane, such as a
    finite order rotation.
    """
    lin = m.linear if isinstance(m, UnimodularMap) else tuple(tuple(r) for r in m)
    n = len(lin)
    if qmat_det(lin) != 1:
        raise ValueError("not an A-type monodromy")
    nm = tuple(
        tuple(lin[i][j] - (1 if i == j else 0) for j in range(n)) for i in range(n)
    )
    if all(x == 0 for row in nm for x in row):
        return 0
    cols = [tuple(nm[i][j] for i in range(n)) for j in range(n)]
    pivot = next(col for col in cols if any(col))
    u = primitive(pivot)
    ui = next(i for i in range(n) if u[i] != 0)
    w = []
    for col in cols:
        s = Fraction(col[ui], u[ui])
        if s.denominator != 1 or any(s * u[i] != col[i] for i in range(n)):
            raise ValueError("not an A-type monodromy")
        w.append(int(s))
    if any(sum(nm[i][j] * u[j] for j in range(n)) != 0 for i in range(n)):
        raise ValueError("not an A-type monodromy")
    if n == 2:
        canon = (u[1], -u[0])
        k = next(j for j in range(2) if canon[j] != 0)
        s = Fraction(w[k], canon[k])
        if s.denominator != 1 or any(s * canon[j] != w[j] for j in range(2)):
            raise ValueError("not an A-type monodromy")
        return int(s)
    return content(tuple(w))


# ---------------------------------------------------------------------------
# the discriminant, recomputed from charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscriminantPiece:
    """One straight piece of the discriminant inside a single glued facet.

    endpoints are exact points in the coordinates of cell_a of the
    carrying gluing: a single point in the plane, a segment in space.
    """

    gluing: int
    endpoints: tuple[QVec, ...]
    multiplicity: int


@dataclass(frozen=True)
class DiscriminantNode:
    """A vertex of the discriminant graph.

    Negative flavor nodes sit in the interior of a two dimensional
    face, positive flavor nodes at the midpoint of an identified edge.
    legs collects the multiplicities of the incident pieces, sorted.
    """

    cell: int
    position: QVec
    flavor: str
    legs: tuple[int, ...]

    @property
    def valency(self) -> int:
        return len(self.legs)

    @property
    def local_type(self) -> str:
        names = {3: "trivalent", 4: "fourvalent"}
        stem = names.get(self.valency, f"{self.valency}valent")
        if self.valency == 4:
            return "fourvalent-generalized" if self.flavor == "negative" else "fourvalent-orbifolded"
        return f"{stem}-{self.flavor}"

    @property
    def kl(self) -> tuple[int, int]:
        """The two leg multiplicities of a four valent node, each repeated twice."""
        if self.valency != 4 or self.legs[0] != self.legs[1] or self.legs[2] != self.legs[3]:
            raise ValueError("legs do not pair up into a (k, l) label")
        return (self.legs[0], self.legs[2])


@dataclass(frozen=True)
class DiscriminantComponent:
    """A maximal edge of the discriminant graph: an arc, loop, or point.

    pieces indexes into the graph's piece list. ends names the two
    endpoints of an open arc, each ("node", node index) or
    ("boundary", cell, sorted vertex index pair); a closed loop has no
    ends. In the plane every stratum is a single point component.
    """

    multiplicity: int
    pieces: tuple[int, ...]
    ends: tuple = ()
    closed: bool = False


@dataclass(frozen=True)
class DiscriminantGraph:
    pieces: tuple[DiscriminantPiece, ...]
    nodes: tuple[DiscriminantNode, ...]
    components: tuple[DiscriminantComponent, ...]

    def nodes_of_valency(self, k: int) -> tuple[DiscriminantNode, ...]:
        return tuple(node for node in self.nodes if node.valency == k)

    def edge_multiplicities(self) -> tuple[int, ...]:
        return tuple(sorted(comp.multiplicity for comp in self.components))


def _transport_maps(c: TropicalComplex, gi: int) -> list[IntMat]:
    """Chart transition cell_a to cell_b at each facet vertex, in facet order."""
    g = c.gluings[gi]
    bij = _gluing_bijections(c)[gi]
    fan_data = _fan_data(c)
    out = []
    for i in _facet_tuples(c)[g.cell_a][g.facet_a]:
        j = bij[i]
        out.append(_imat_mul(fan_data[(g.cell_b, j)][2], fan_data[(g.cell_a, i)][1]))
    return out


def _unsigned_shear(m: IntMat) -> int:
    lin = [list(row) for row in m]
    return abs(edge_multiplicity_from_monodromy(lin))


def _plane_pieces(c: TropicalComplex) -> list[DiscriminantPiece]:
    pieces = []
    bijections = _gluing_bijections(c)
    for gi, g in enumerate(c.gluings):
        t_p, t_q = _transport_maps(c, gi)
        if t_p == t_q:
            continue
        p_idx, q_idx = _facet_tuples(c)[g.cell_a][g.facet_a]
        bij = bijections[gi]
        loop = ChamberPath(
            cells=(g.cell_a, g.cell_b),
            crossings=(
                (p_idx, bij[p_idx]),
                (bij[q_idx], q_idx),
            ),
        )
        mult = edge_multiplicity_from_monodromy(monodromy(c, loop, base=q_idx))
        cell = c.cells[g.cell_a]
        mid = tuple(
            Fraction(a + b, 2)
            for a, b in zip(cell.vertices[p_idx], cell.vertices[q_idx])
        )
        pieces.append(DiscriminantPiece(gi, (mid,), mult))
    return pieces


def _space_zone_data(
    c: TropicalComplex, gi: int
) -> tuple[list[DiscriminantPiece], list[list], DiscriminantNode | None]:
    """Pieces in one glued face, their end markers, and a central node if any.

    End markers are ("mid", cell, frozenset of two vertex indices) for a
    crossing edge midpoint, or ("ctr", gluing index) for the barycenter
    of the face when three or more zones meet there.
    """
    g = c.gluings[gi]
    face = _facet_tuples(c)[g.cell_a][g.facet_a]
    n = len(face)
    transports = _transport_maps(c, gi)
    breaks = [k for k in range(n) if transports[k] != transports[(k + 1) % n]]
    if not breaks:
        return [], [], None
    if len(breaks) == 1:
        raise ArithmeticError(
            f"transport around facet {g.facet_a} of cell {g.cell_a} changes "
            f"exactly once, which cannot happen on a closed walk"
        )
    cell = c.cells[g.cell_a]
    mids = {}
    mults = {}
    for k in breaks:
        k2 = (k + 1) % n
        a, b = cell.vertices[face[k]], cell.vertices[face[k2]]
        mids[k] = tuple(Fraction(x + y, 2) for x, y in zip(a, b))
        mults[k] = _unsigned_shear(
            _imat_mul(transports[k], _imat_inv(transports[k2]))
        )
        if mults[k] == 0:
            raise ArithmeticError(
                f"zone change without shear around facet {g.facet_a} of "
                f"cell {g.cell_a}"
            )
    mid_marker = {
        k: ("mid", g.cell_a, frozenset((face[k], face[(k + 1) % n])))
        for k in breaks
    }
    if len(breaks) == 2:
        k1, k2 = breaks
        if mults[k1] != mults[k2]:
            raise ArithmeticError(
                f"the two crossings of facet {g.facet_a} of cell {g.cell_a} "
                f"carry different multiplicities {mults[k1]} and {mults[k2]}"
            )
        piece = DiscriminantPiece(gi, (mids[k1], mids[k2]), mults[k1])
        return [piece], [[mid_marker[k1], mid_marker[k2]]], None
    center = tuple(
        sum(Fraction(cell.vertices[i][t]) for i in face) / n
        for t in range(cell.ambient_dim)
    )
    node = DiscriminantNode(
        cell=g.cell_a,
        position=center,
        flavor="negative",
        legs=tuple(sorted(mults[k] for k in breaks)),
    )
    pieces = [
        DiscriminantPiece(gi, (center, mids[k]), mults[k]) for k in breaks
    ]
    markers = [[("ctr", gi), mid_marker[k]] for k in breaks]
    return pieces, markers, node


def _face_classes(c: TropicalComplex, dim: int):
    """Union-find classes of the dimension dim faces across all gluings."""
    cache = _cache(c)
    key = ("face_classes", dim)
    if key not in cache:
        uf = _UnionFind()
        per_cell = [cell_faces(cell) for cell in c.cells]
        for ci, faces in enumerate(per_cell):
            for f in faces.get(dim, ()):
                uf.add((ci, f))
        for g, bij in zip(c.gluings, _gluing_bijections(c)):
            carrier = set(bij)
            for f in per_cell[g.cell_a].get(dim, ()):
                if f <= carrier:
                    uf.union((g.cell_a, f), (g.cell_b, frozenset(bij[i] for i in f)))
        groups: dict = {}
        for site in uf.parent:
            groups.setdefault(uf.find(site), []).append(site)
        cache[key] = {root: tuple(sorted(members, key=_face_site_key)) for root, members in groups.items()}
    return cache[key]


def _face_site_key(site):
    return (site[0], tuple(sorted(site[1])))


def _edge_class_on_boundary(c: TropicalComplex, members) -> bool:
    for ci, f in members:
        for bc, bf in c.boundary:
            if bc == ci and f <= set(_facet_tuples(c)[bc][bf]):
                return True
    return False


def _derive_graph(c: TropicalComplex) -> DiscriminantGraph:
    if c.dim == 2:
        pieces = tuple(_plane_pieces(c))
        components = tuple(
            DiscriminantComponent(p.multiplicity, (i,)) for i, p in enumerate(pieces)
        )
        return DiscriminantGraph(pieces, (), components)

    pieces: list[DiscriminantPiece] = []
    markers: list[list] = []
    nodes: list[DiscriminantNode] = []
    node_ids: dict = {}
    for gi in range(len(c.gluings)):
        ps, ms, node = _space_zone_data(c, gi)
        if node is not None:
            node_ids[("ctr", gi)] = len(nodes)
            nodes.append(node)
        pieces.extend(ps)
        markers.extend(ms)

    edge_classes = _face_classes(c, 1)
    root_of = {
        site: root for root, members in edge_classes.items() for site in members
    }
    incidence: dict = {}
    for pi, ms in enumerate(markers):
        for slot, marker in enumerate(ms):
            if marker[0] == "mid":
                root = root_of[(marker[1], marker[2])]
                incidence.setdefault(root, []).append((pi, slot))

    resolved: list[list] = [[None, None] for _ in pieces]
    for pi, ms in enumerate(markers):
        for slot, marker in enumerate(ms):
            if marker[0] == "ctr":
                resolved[pi][slot] = ("node", node_ids[marker])
    links: dict = {}
    for root, incs in sorted(incidence.items(), key=lambda kv: _face_site_key(kv[0])):
        members = edge_classes[root]
        if len(incs) == 1:
            if not _edge_class_on_boundary(c, members):
                ci, f = members[0]
                raise ArithmeticError(
                    f"discriminant dead-ends at interior edge "
                    f"{tuple(sorted(f))} of cell {ci}"
                )
            pi, slot = incs[0]
            resolved[pi][slot] = ("boundary", members[0][0], tuple(sorted(members[0][1])))
        elif len(incs) == 2:
            (p1, s1), (p2, s2) = incs
            if pieces[p1].multiplicity != pieces[p2].multiplicity:
                ci, f = members[0]
                raise ArithmeticError(
                    f"discriminant multiplicity changes from "
                    f"{pieces[p1].multiplicity} to {pieces[p2].multiplicity} "
                    f"across edge {tuple(sorted(f))} of cell {ci}"
                )
            links[root] = ((p1, s1), (p2, s2))
            resolved[p1][s1] = ("link", root)
            resolved[p2][s2] = ("link", root)
        else:
            ci, f = members[0]
            pair = sorted(f)
            cell = c.cells[ci]
            mid = tuple(
                Fraction(a + b, 2)
                for a, b in zip(cell.vertices[pair[0]], cell.vertices[pair[1]])
            )
            node = DiscriminantNode(
                cell=ci,
                position=mid,
                flavor="positive",
                legs=tuple(sorted(pieces[pi].multiplicity for pi, _ in incs)),
            )
            nid = len(nodes)
            nodes.append(node)
            for pi, slot in incs:
                resolved[pi][slot] = ("node", nid)

    components: list[DiscriminantComponent] = []
    seen_pieces = set()

    def walk(start_pi: int, start_slot: int):
        chain = [start_pi]
        seen_pieces.add(start_pi)
        pi, slot = start_pi, 1 - start_slot
        while True:
            marker = resolved[pi][slot]
            if marker[0] != "link":
                return chain, marker, False
            (p1, s1), (p2, s2) = links[marker[1]]
            nxt, nslot = (p2, s2) if (p1, s1) == (pi, slot) else (p1, s1)
            if nxt in seen_pieces:
                return chain, None, True
            chain.append(nxt)
            seen_pieces.add(nxt)
            pi, slot = nxt, 1 - nslot

    for pi in range(len(pieces)):
        if pi in seen_pieces:
            continue
        open_slots = [s for s in (0, 1) if resolved[pi][s][0] != "link"]
        if not open_slots:
            continue
        start_slot = open_slots[0]
        chain, far_end, _ = walk(pi, start_slot)
        near = resolved[pi][start_slot]
        ends = (_strip_marker(near), _strip_marker(far_end))
        components.append(
            DiscriminantComponent(
                pieces[pi].multiplicity, tuple(chain), ends, closed=False
            )
        )
    for pi in range(len(pieces)):
        if pi in seen_pieces:
            continue
        chain, _, _ = walk(pi, 0)
        components.append(
            DiscriminantComponent(
                pieces[pi].multiplicity, tuple(chain), (), closed=True
            )
        )
    return DiscriminantGraph(tuple(pieces), tuple(nodes), tuple(components))


def _strip_marker(marker):
    if marker[0] == "node":
        return ("node", marker[1])
    return marker


def _stored_piece_keys(c: TropicalComplex):
    lookup = _facet_lookup(c)
    keys = []
    for locus in c.discriminant:
        facets = _facet_tuples(c)[locus.cell]
        fi = next(
            i for i, f in enumerate(facets) if f == tuple(locus.face)
        )
        gi, side = lookup[(locus.cell, fi)]
        pts = _locus_cartesian_points(c, locus)
        mult = locus.multiplicity
        if side == "b":
            inv = c.gluings[gi].map.inverse()
            pts = tuple(_apply_affine(inv, p) for p in pts)
            if c.dim == 2:
                mult = c.gluings[gi].map.det * mult
        keys.append((gi, frozenset(pts), mult))
    return keys


def _derived_piece_keys(graph: DiscriminantGraph):
    return [
        (p.gluing, frozenset(p.endpoints), p.multiplicity) for p in graph.pieces
    ]


def discriminant_graph(c: TropicalComplex) -> DiscriminantGraph:
    """The discriminant of a complex, recomputed from monodromy.

    Walks every glued facet, compares the chart transports at its
    corners, and assembles the resulting strata into a graph: pieces
    inside faces, nodes where three or more legs meet, and maximal
    components. The stored discriminant labels must agree exactly with
    the derived ones; any disagreement raises ArithmeticError, since a
    wrong label means the complex lies about its own geometry.
    """
    _ensure_valid(c)
    cache = _cache(c)
    if "graph" not in cache:
        graph = _derive_graph(c)
        stored = sorted(_stored_piece_keys(c), key=_piece_key_sort)
        derived = sorted(_derived_piece_keys(graph), key=_piece_key_sort)
        if stored != derived:
            missing = [k for k in derived if k not in stored]
            extra = [k for k in stored if k not in derived]
            parts = []
            if missing:
                parts.append(f"monodromy finds {_fmt_piece_keys(missing)} not in the stored labels")
            if extra:
                parts.append(f"stored labels claim {_fmt_piece_keys(extra)} not found by monodromy")
            raise ArithmeticError(
                "stored discriminant disagrees with monodromy: " + "; ".join(parts)
            )
        cache["graph"] = graph
    return cache["graph"]


def _piece_key_sort(key):
    gi, pts, mult = key
    return (gi, sorted(tuple(p) for p in pts), mult)


def _fmt_piece_keys(keys) -> str:
    out = []
    for gi, pts, mult in keys:
        where = " to ".join(_fmt_point(p) for p in sorted(pts))
        out.append(f"multiplicity {mult} at {where} in gluing {gi}")
    return "; ".join(out)


def derived_discriminant(c: TropicalComplex) -> tuple[DiscriminantLocus, ...]:
    """The discriminant strata a complex should store, computed from charts.

    Ignores whatever is currently stored and returns canonical strata:
    each carried by cell_a of its gluing, with barycentric weights over
    the facet's vertex tuple.
    """
    _ensure_valid(c)
    graph = _derive_graph(c)
    out = []
    for piece in graph.pieces:
        g = c.gluings[piece.gluing]
        face = _facet_tuples(c)[g.cell_a][g.facet_a]
        cell = c.cells[g.cell_a]
        points = tuple(
            _barycentric_on_face(cell, face, p) for p in piece.endpoints
        )
        out.append(
            DiscriminantLocus(g.cell_a, face, points, piece.multiplicity)
        )
    return tuple(out)


def _barycentric_on_face(
    cell: LatticePolytope, face: tuple[int, ...], point: QVec
) -> tuple[Fraction, ...]:
    """Canonical barycentric weights of a point on a face of a cell.

    Midpoints of face edges get weight one half on each endpoint and
    the barycenter gets equal weights, so equal points always produce
    equal weight tuples even on faces where barycentric coordinates
    are not unique.
    """
    n = len(face)
    for s in range(n):
        a = cell.vertices[face[s]]
        if point == _qpoint(a):
            return tuple(Fraction(int(i == s)) for i in range(n))
    if n > 2:
        center = tuple(
            sum(Fraction(cell.vertices[i][t]) for i in face) / n
            for t in range(cell.ambient_dim)
        )
        if point == center:
            return (Fraction(1, n),) * n
    for s in range(n):
        for t in range(s + 1, n):
            a, b = cell.vertices[face[s]], cell.vertices[face[t]]
            seg = LatticePolytope([a, b])
            if seg.dim == 1 and seg.contains(point):
                d = vsub(b, a)
                k = next(i for i in range(len(d)) if d[i] != 0)
                lam = (point[k] - a[k]) / d[k]
                weights = [Fraction(0)] * n
                weights[s] = 1 - lam
                weights[t] = lam
                return tuple(weights)
    raise ValueError(
        f"no canonical barycentric form for {_fmt_point(point)} on this face"
    )


def with_derived_discriminant(c: TropicalComplex) -> TropicalComplex:
    """Copy of the complex whose stored strata are the derived ones."""
    return replace(c, discriminant=derived_discriminant(c))


@dataclass(frozen=True)
class SimplicityReport:
    simple_positive: bool
    violations: tuple[str, ...]


def is_simple_positive(c: TropicalComplex) -> SimplicityReport:
    """Whether every stratum has multiplicity one and every node is trivalent.

    The report lists each offending component or node, so a failing
    complex explains which surgery is still missing.
    """
    graph = discriminant_graph(c)
    violations = []
    for comp in graph.components:
        if abs(comp.multiplicity) != 1:
            piece = graph.pieces[comp.pieces[0]]
            violations.append(
                f"component through gluing {piece.gluing} has multiplicity "
                f"{comp.multiplicity}"
            )
    for node in graph.nodes:
        if node.valency != 3:
            violations.append(
                f"{node.local_type} node at {_fmt_point(node.position)} "
                f"in cell {node.cell}"
            )
    return SimplicityReport(not violations, tuple(violations))


# ---------------------------------------------------------------------------
# global invariants
# ---------------------------------------------------------------------------

def euler_characteristic(c: TropicalComplex) -> int:
    """Alternating sum of identified face counts over all dimensions."""
    _ensure_valid(c)
    total = 0
    for d in range(c.dim + 1):
        total += (-1) ** d * len(_face_classes(c, d))
    return total


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

FORMAT_NAME = "tropaffine-complex"
FORMAT_VERSION = 1


def serialize(c: TropicalComplex) -> bytes:
    """Deterministic byte encoding of a complex.

    The encoding is canonical JSON: sorted keys, no whitespace, exact
    rationals as numerator and denominator pairs. Equal complexes
    serialize to equal bytes and deserialize restores an equal complex.
    """
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "cells": [[list(v) for v in cell.vertices] for cell in c.cells],
        "gluings": [
            {
                "cell_a": g.cell_a,
                "facet_a": g.facet_a,
                "cell_b": g.cell_b,
                "facet_b": g.facet_b,
                "linear": [list(row) for row in g.map.linear],
                "translation": list(g.map.translation),
            }
            for g in c.gluings
        ],
        "fans": [
            {
                "rays": [list(r) for r in fan.rays],
                "cones": [list(cone) for cone in fan.cones],
                "members": [
                    {
                        "cell": site[0],
                        "vertex": site[1],
                        "assignment": [[list(t), ri] for t, ri in pairs],
                    }
                    for site, pairs in fan.members
                ],
            }
            for fan in c.fans
        ],
        "discriminant": [
            {
                "cell": locus.cell,
                "face": list(locus.face),
                "points": [
                    [[w.numerator, w.denominator] for w in weights]
                    for weights in locus.points
                ],
                "multiplicity": locus.multiplicity,
                "local_type": locus.local_type,
            }
            for locus in c.discriminant
        ],
        "pl": None if c.pl is None else [list(v) for v in c.pl.values],
        "boundary": sorted([ci, fi] for ci, fi in c.boundary),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _expect(doc: dict, key: str, kind, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ValueError(f"serialized complex is missing {key!r} in {where}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ValueError(f"field {key!r} in {where} has the wrong type")
    return value


def deserialize(data: bytes | str) -> TropicalComplex:
    """Rebuild a complex from its byte encoding.

    A malformed or truncated document raises ValueError naming the byte
    offset where parsing failed; a document written by a different
    format version raises ValueError naming both versions. Structural
    validity of the decoded complex is not rechecked here; run validate
    for that.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(
            f"invalid complex encoding at byte {err.pos}: {err.msg}"
        ) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ValueError("not a serialized complex: format marker missing")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ValueError(
            f"serialized complex has version {version!r}; this build reads "
            f"version {FORMAT_VERSION}"
        )
    cells = tuple(
        LatticePolytope([tuple(int(x) for x in v) for v in cell])
        for cell in _expect(doc, "cells", list, "document")
    )
    gluings = []
    for k, g in enumerate(_expect(doc, "gluings", list, "document")):
        where = f"gluing {k}"
        gluings.append(
            Gluing(
                _expect(g, "cell_a", int, where),
                _expect(g, "facet_a", int, where),
                _expect(g, "cell_b", int, where),
                _expect(g, "facet_b", int, where),
                UnimodularMap(
                    tuple(tuple(int(x) for x in row) for row in _expect(g, "linear", list, where)),
                    tuple(int(x) for x in _expect(g, "translation", list, where)),
                ),
            )
        )
    fans = []
    for k, f in enumerate(_expect(doc, "fans", list, "document")):
        where = f"fan {k}"
        fans.append(
            FanStructure(
                tuple(tuple(int(x) for x in r) for r in _expect(f, "rays", list, where)),
                tuple(tuple(int(i) for i in cone) for cone in _expect(f, "cones", list, where)),
                tuple(
                    (
                        (_expect(m, "cell", int, where), _expect(m, "vertex", int, where)),
                        tuple(
                            (tuple(int(x) for x in t), int(ri))
                            for t, ri in _expect(m, "assignment", list, where)
                        ),
                    )
                    for m in _expect(f, "members", list, where)
                ),
            )
        )
    discriminant = []
    for k, d in enumerate(_expect(doc, "discriminant", list, "document")):
        where = f"discriminant stratum {k}"
        discriminant.append(
            DiscriminantLocus(
                _expect(d, "cell", int, where),
                tuple(int(i) for i in _expect(d, "face", list, where)),
                tuple(
                    tuple(Fraction(int(num), int(den)) for num, den in weights)
                    for weights in _expect(d, "points", list, where)
                ),
                _expect(d, "multiplicity", int, where),
                _expect(d, "local_type", str, where),
            )
        )
    pl_values = _expect(doc, "pl", None, "document")
    pl = (
        None
        if pl_values is None
        else MultivaluedPL(tuple(tuple(int(x) for x in v) for v in pl_values))
    )
    boundary = frozenset(
        (int(ci), int(fi)) for ci, fi in _expect(doc, "boundary", list, "document")
    )
    return TropicalComplex(cells, tuple(gluings), tuple(fans), tuple(discriminant), pl, boundary)


# ---------------------------------------------------------------------------
# isomorphism
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexIsomorphism:
    """Integral affine identification of one complex with another.

    cell_map[i] names the image cell of cell i and cell_maps[i] the
    unimodular affine map between their coordinates.
    """

    cell_map: tuple[int, ...]
    cell_maps: tuple[UnimodularMap, ...]


def _polytope_isos(p: LatticePolytope, q: LatticePolytope):
    """All unimodular affine maps carrying one polytope onto another."""
    if p.dim != q.dim or p.ambient_dim != q.ambient_dim:
        return
    if len(p.vertices) != len(q.vertices):
        return
    dim = p.ambient_dim
    v0 = p.vertices[0]
    tangents = p.vertex_tangents(v0)
    basis: list[Vec] = []
    for t in tangents:
        if qrank(basis + [t]) > len(basis):
            basis.append(t)
    rest = [t for t in tangents if t not in basis]
    target_set = set(q.vertices)
    for w in q.vertices:
        images = q.vertex_tangents(w)
        for assign in itertools.permutations(images, dim):
            try:
                lin_q = solve_linear_map(list(zip(basis, assign)), dim)
            except ValueError:
                continue
            if not qmat_is_integral(lin_q) or abs(qmat_det(lin_q)) != 1:
                continue
            lin = qmat_to_int(lin_q)
            image_tangents = set(images)
            if any(
                tuple(_mat_vec(lin, t)) not in image_tangents for t in rest
            ):
                continue
            translation = vsub(w, _mat_vec(lin, v0))
            f = UnimodularMap(lin, translation)
            if {f.apply(v) for v in p.vertices} == target_set:
                yield f


def _neighbour_map(
    cell1: LatticePolytope,
    cell2: LatticePolytope,
    anchor: Sequence[Vec],
    induced: UnimodularMap,
) -> UnimodularMap | None:
    """The unimodular map of cell1 onto cell2 matching induced on anchor.

    The part of a gluing map transverse to its facet is gauge, so maps
    propagated across gluings are only pinned down on the shared facet.
    A bounded full dimensional cell admits at most one unimodular map
    onto another extending a given facet correspondence: a difference
    would be an automorphism fixing the facet pointwise, which either
    shears with unbounded orbits or swaps the sides of its hyperplane.
    """
    if {tuple(induced.apply(v)) for v in cell1.vertices} == set(cell2.vertices):
        return induced
    targets = [(v, induced.apply(v)) for v in anchor]
    for h in _polytope_isos(cell1, cell2):
        if all(h.apply(v) == t for v, t in targets):
            return h
    return None


def _image_facet_index(
    c2: TropicalComplex, cell2: int, image_vertices: set
) -> int | None:
    verts = c2.cells[cell2].vertices
    for fi, f in enumerate(_facet_tuples(c2)[cell2]):
        if {verts[i] for i in f} == image_vertices:
            return fi
    return None


def _match_fans(c1, c2, cell_map, cell_maps) -> bool:
    classes1, site_class1 = _vertex_classes(c1)
    classes2, site_class2 = _vertex_classes(c2)
    data1, data2 = _fan_data(c1), _fan_data(c2)
    if len(classes1) != len(classes2):
        return False
    for cls in classes1:
        fan_map = None
        k2 = None
        for ci, vi in cls:
            f = cell_maps[ci]
            v2 = f.apply(c1.cells[ci].vertices[vi])
            ci2 = cell_map[ci]
            try:
                vi2 = c2.cells[ci2].vertices.index(v2)
            except ValueError:
                return False
            if k2 is None:
                k2 = site_class2[(ci2, vi2)]
            elif site_class2[(ci2, vi2)] != k2:
                return False
            fi1, chart1, _ = data1[(ci, vi)]
            fi2, chart2, _ = data2[(ci2, vi2)]
            candidate = _imat_mul(_imat_mul(chart2, f.linear), _imat_inv(chart1))
            if fan_map is None:
                fan_map = candidate
            elif fan_map != candidate:
                return False
        fi1 = data1[cls[0]][0]
        site2 = None
        ci, vi = cls[0]
        v2 = cell_maps[ci].apply(c1.cells[ci].vertices[vi])
        ci2 = cell_map[ci]
        vi2 = c2.cells[ci2].vertices.index(v2)
        fi2 = data2[(ci2, vi2)][0]
        fan1, fan2 = c1.fans[fi1], c2.fans[fi2]
        ray_images = {tuple(_mat_vec(fan_map, r)) for r in fan1.rays}
        if ray_images != set(fan2.rays):
            return False
        index2 = {r: i for i, r in enumerate(fan2.rays)}
        ray_map = {
            i: index2[tuple(_mat_vec(fan_map, r))] for i, r in enumerate(fan1.rays)
        }
        cones1 = {frozenset(ray_map[i] for i in cone) for cone in fan1.cones}
        cones2 = {frozenset(cone) for cone in fan2.cones}
        if cones1 != cones2:
            return False
        if (c1.pl is None) != (c2.pl is None):
            return False
        if c1.pl is not None:
            vals1 = c1.pl.values[fi1]
            vals2 = c2.pl.values[fi2]
            grad_free = _pl_values_match(fan1, fan2, ray_map, vals1, vals2)
            if not grad_free:
                return False
    return True


def _pl_values_match(fan1, fan2, ray_map, vals1, vals2) -> bool:
    """Compare potentials modulo a linear function on the matched fans."""
    shift = {}
    for i, r in enumerate(fan1.rays):
        shift[i] = vals2[ray_map[i]] - vals1[i]
    grad = _cone_gradient(
        fan1.rays, tuple(range(len(fan1.rays))), [shift[i] for i in range(len(fan1.rays))]
    )
    return grad is not None


def _match_discriminant(c1, c2, cell_map, cell_maps) -> bool:
    keys2 = sorted(_stored_piece_keys(c2), key=_piece_key_sort)
    transported = []
    lookup2 = _facet_lookup(c2)
    for locus in c1.discriminant:
        f = cell_maps[locus.cell]
        ci2 = cell_map[locus.cell]
        pts = tuple(
            _apply_affine(f, p) for p in _locus_cartesian_points(c1, locus)
        )
        image_face = {
            f.apply(c1.cells[locus.cell].vertices[i]) for i in locus.face
        }
        fi2 = _image_facet_index(c2, ci2, image_face)
        if fi2 is None or (ci2, fi2) not in lookup2:
            return False
        gi2, side = lookup2[(ci2, fi2)]
        mult = locus.multiplicity
        if c1.dim == 2:
            mult *= f.det
        if side == "b":
            inv = c2.gluings[gi2].map.inverse()
            pts = tuple(_apply_affine(inv, p) for p in pts)
            if c1.dim == 2:
                mult *= c2.gluings[gi2].map.det
        transported.append((gi2, frozenset(pts), mult))
    return sorted(transported, key=_piece_key_sort) == keys2


def find_isomorphism(
    c1: TropicalComplex, c2: TropicalComplex
) -> ComplexIsomorphism | None:
    """Search for an integral affine isomorphism between two complexes.

    Seeds every unimodular map of the first cell onto each cell of the
    other, propagates across gluings, and accepts only if cells, glued
    facets, boundary flags, fans, potentials and stored discriminant
    all correspond. Both complexes must be valid and connected. The
    search is deterministic, so repeated runs return the same witness.
    """
    _ensure_valid(c1)
    _ensure_valid(c2)
    if len(c1.cells) != len(c2.cells) or c1.dim != c2.dim:
        return None
    if not c1.cells:
        return ComplexIsomorphism((), ())
    if not _is_connected(c1):
        raise ValueError("isomorphism search needs a connected complex")
    lookup1, lookup2 = _facet_lookup(c1), _facet_lookup(c2)
    for seed_cell in range(len(c2.cells)):
        for seed_map in _polytope_isos(c1.cells[0], c2.cells[seed_cell]):
            assignment: dict[int, tuple[int, UnimodularMap]] = {0: (seed_cell, seed_map)}
            queue = [0]
            ok = True
            while queue and ok:
                ci = queue.pop()
                ci2, f = assignment[ci]
                for fi, face in enumerate(_facet_tuples(c1)[ci]):
                    image = {
                        f.apply(c1.cells[ci].vertices[i]) for i in face
                    }
                    fi2 = _image_facet_index(c2, ci2, image)
                    if fi2 is None:
                        ok = False
                        break
                    here = lookup1.get((ci, fi))
                    there = lookup2.get((ci2, fi2))
                    if (here is None) != (there is None):
                        ok = False
                        break
                    if here is None:
                        if ((ci, fi) in c1.boundary) != ((ci2, fi2) in c2.boundary):
                            ok = False
                            break
                        continue
                    g1 = c1.gluings[here[0]]
                    g2 = c2.gluings[there[0]]
                    if here[1] == "a":
                        nb1, map1 = g1.cell_b, g1.map
                    else:
                        nb1, map1 = g1.cell_a, g1.map.inverse()
                    if there[1] == "a":
                        nb2, map2 = g2.cell_b, g2.map
                    else:
                        nb2, map2 = g2.cell_a, g2.map.inverse()
                    induced = map2.compose(f).compose(map1.inverse())
                    nb_facet = (
                        g1.facet_b if here[1] == "a" else g1.facet_a
                    )
                    anchor = [
                        c1.cells[nb1].vertices[i]
                        for i in _facet_tuples(c1)[nb1][nb_facet]
                    ]
                    step = _neighbour_map(
                        c1.cells[nb1], c2.cells[nb2], anchor, induced
                    )
                    if step is None:
                        ok = False
                        break
                    if nb1 in assignment:
                        if assignment[nb1] != (nb2, step):
                            ok = False
                            break
                    else:
                        assignment[nb1] = (nb2, step)
                        queue.append(nb1)
            if not ok or len(assignment) != len(c1.cells):
                continue
            cell_map = tuple(assignment[i][0] for i in range(len(c1.cells)))
            if sorted(cell_map) != list(range(len(c2.cells))):
                continue
            cell_maps = tuple(assignment[i][1] for i in range(len(c1.cells)))
            if not _match_fans(c1, c2, cell_map, cell_maps):
                continue
            if not _match_discriminant(c1, c2, cell_map, cell_maps):
                continue
            return ComplexIsomorphism(cell_map, cell_maps)
    return None


def are_isomorphic(c1: TropicalComplex, c2: TropicalComplex) -> bool:
    return find_isomorphism(c1, c2) is not None


def _is_connected(c: TropicalComplex) -> bool:
    if not c.cells:
        return True
    seen = {0}
    queue = [0]
    neighbours: dict[int, set[int]] = {i: set() for i in range(len(c.cells))}
    for g in c.gluings:
        neighbours[g.cell_a].add(g.cell_b)
        neighbours[g.cell_b].add(g.cell_a)
    while queue:
        ci = queue.pop()
        for nb in neighbours[ci]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(c.cells)


# ---------------------------------------------------------------------------
# assembly helpers
# ---------------------------------------------------------------------------

def make_gluing(
    cells: Sequence[LatticePolytope],
    cell_a: int,
    facet_vertices: Iterable[Sequence[int]],
    cell_b: int,
    f: UnimodularMap,
) -> Gluing:
    """Gluing record from a facet given by vertex coordinates and a map."""
    want = {tuple(v) for v in facet_vertices}
    facets_a = facet_index_tuples(cells[cell_a])
    verts_a = cells[cell_a].vertices
    fa = next(
        (i for i, ft in enumerate(facets_a) if {verts_a[j] for j in ft} == want),
        None,
    )
    if fa is None:
        raise ValueError(f"cell {cell_a} has no facet with vertices {sorted(want)}")
    image = {f.apply(v) for v in want}
    facets_b = facet_index_tuples(cells[cell_b])
    verts_b = cells[cell_b].vertices
    fb = next(
        (i for i, ft in enumerate(facets_b) if {verts_b[j] for j in ft} == image),
        None,
    )
    if fb is None:
        raise ValueError(
            f"the image of the facet is not a facet of cell {cell_b}"
        )
    return Gluing(cell_a, fa, cell_b, fb, f)


def fans_from_charts(
    cells: Sequence[LatticePolytope],
    gluings: Sequence[Gluing],
    charts: Mapping[Site, Sequence[Sequence[int]]],
) -> tuple[FanStructure, ...]:
    """Assemble fan structures from one linear chart per cell corner.

    Rays and cones are read off as the images of the edge directions
    and tangent cones under the given charts, so the result is exactly
    the fan the charts describe. Every corner of every cell must be
    covered. Raises ValueError when a corner is missing or a chart is
    not a lattice isomorphism.
    """
    helper = TropicalComplex(tuple(cells), tuple(gluings))
    classes, _ = _vertex_classes(helper)
    fans = []
    for cls in classes:
        rays: list[Vec] = []
        ray_index: dict[Vec, int] = {}
        cones: list[tuple[int, ...]] = []
        members = []
        for site in cls:
            if site not in charts:
                raise ValueError(f"no chart given for cell corner {site}")
            chart = tuple(tuple(int(x) for x in row) for row in charts[site])
            if abs(qmat_det(chart)) != 1:
                raise ValueError(f"chart at corner {site} is not unimodular")
            ci, vi = site
            cell = cells[ci]
            pairs = []
            for t in cell.vertex_tangents(cell.vertices[vi]):
                r = tuple(_mat_vec(chart, t))
                if r not in ray_index:
                    ray_index[r] = len(rays)
                    rays.append(r)
                pairs.append((t, ray_index[r]))
            members.append((site, tuple(pairs)))
            occupied = tuple(sorted({ri for _, ri in pairs}))
            if len(occupied) == 2 and cell.ambient_dim == 2:
                i, j = occupied
                if det2(rays[i], rays[j]) < 0:
                    occupied = (j, i)
            if occupied not in cones:
                cones.append(occupied)
        fans.append(FanStructure(tuple(rays), tuple(cones), tuple(members)))
    return tuple(fans)


def assemble_complex(
    cells: Sequence[LatticePolytope],
    gluings: Sequence[Gluing],
    charts: Mapping[Site, Sequence[Sequence[int]]],
    pl: Mapping[Site, Mapping[Sequence[int], int]] | None = None,
    extra_cones: Mapping[Site, Sequence[Sequence[Sequence[int]]]] | None = None,
) -> TropicalComplex:
    """Build and validate a complex from cells, gluings and corner charts.

    Unglued facets become boundary, fans are assembled from the charts,
    and the discriminant is derived from monodromy, so the result
    always carries honest labels. pl optionally gives potential values
    by fan ray vector, keyed by any corner of each vertex; rays the
    chart assembly does not produce can be introduced through
    extra_cones, which lists additional maximal cones by ray vectors.
    """
    cells = tuple(cells)
    gluings = tuple(gluings)
    fans = fans_from_charts(cells, gluings, charts)
    if extra_cones:
        fans = _extend_fans(fans, extra_cones)
    glued = {(g.cell_a, g.facet_a) for g in gluings} | {
        (g.cell_b, g.facet_b) for g in gluings
    }
    boundary = frozenset(
        (ci, fi)
        for ci in range(len(cells))
        for fi in range(len(facet_index_tuples(cells[ci])))
        if (ci, fi) not in glued
    )
    pl_struct = None
    if pl is not None:
        values = []
        site_fans = {site: fi for fi, fan in enumerate(fans) for site, _ in fan.members}
        per_fan: list[dict[Vec, int]] = [dict() for _ in fans]
        for site, ray_values in pl.items():
            if tuple(site) not in site_fans:
                raise ValueError(f"potential keyed by unknown corner {site}")
            fi = site_fans[tuple(site)]
            for ray, value in ray_values.items():
                ray = tuple(int(x) for x in ray)
                if per_fan[fi].get(ray, value) != value:
                    raise ValueError(
                        f"conflicting potential values for ray {_fmt_point(ray)}"
                    )
                per_fan[fi][ray] = value
        for fi, fan in enumerate(fans):
            missing = [r for r in fan.rays if r not in per_fan[fi]]
            if missing:
                raise ValueError(
                    f"potential misses ray {_fmt_point(missing[0])} of fan {fi}"
                )
            values.append(tuple(per_fan[fi][r] for r in fan.rays))
        pl_struct = MultivaluedPL(tuple(values))
    complex_ = TropicalComplex(cells, gluings, fans, (), pl_struct, boundary)
    problems = validate(complex_)
    if problems:
        raise ValueError("assembled complex is invalid: " + "; ".join(problems[:4]))
    return with_derived_discriminant(complex_)


def _extend_fans(fans, extra_cones):
    site_fans = {site: fi for fi, fan in enumerate(fans) for site, _ in fan.members}
    additions: dict[int, list] = {}
    for site, cones in extra_cones.items():
        if tuple(site) not in site_fans:
            raise ValueError(f"extra cones keyed by unknown corner {site}")
        additions.setdefault(site_fans[tuple(site)], []).extend(cones)
    out = []
    for fi, fan in enumerate(fans):
        if fi not in additions:
            out.append(fan)
            continue
        rays = list(fan.rays)
        ray_index = {r: i for i, r in enumerate(rays)}
        cones = list(fan.cones)
        for cone_rays in additions[fi]:
            indices = []
            for r in cone_rays:
                r = tuple(int(x) for x in r)
                if r not in ray_index:
                    ray_index[r] = len(rays)
                    rays.append(r)
                indices.append(ray_index[r])
            if len(indices) == 2 and len(rays[0]) == 2:
                if det2(rays[indices[0]], rays[indices[1]]) < 0:
                    indices = [indices[1], indices[0]]
                cone = tuple(indices)
            else:
                cone = tuple(sorted(indices))
            if cone not in cones:
                cones.append(cone)
        out.append(FanStructure(tuple(rays), tuple(cones), fan.members))
    return tuple(out)


def subcomplex_of_cells(
    c: TropicalComplex, keep: Iterable[int]
) -> TropicalComplex:
    """Restriction to a subset of cells, exposing cut facets as boundary.

    Fans are rebuilt for the surviving corners: a vertex class may
    split, and each part keeps only the rays and cones its own corners
    occupy. Stored discriminant strata survive when their carrying
    gluing does.
    """
    _ensure_valid(c)
    kept = sorted(set(keep))
    if any(not 0 <= ci < len(c.cells) for ci in kept):
        raise ValueError("subcomplex names a missing cell")
    new_index = {ci: k for k, ci in enumerate(kept)}
    cells = tuple(c.cells[ci] for ci in kept)
    gluings = []
    old_gluing_index = {}
    for gi, g in enumerate(c.gluings):
        if g.cell_a in new_index and g.cell_b in new_index:
            old_gluing_index[gi] = len(gluings)
            gluings.append(
                replace(g, cell_a=new_index[g.cell_a], cell_b=new_index[g.cell_b])
            )
    charts = {}
    fan_data = _fan_data(c)
    for (ci, vi), (fi, chart, _) in fan_data.items():
        if ci in new_index:
            charts[(new_index[ci], vi)] = chart
    fans = fans_from_charts(cells, tuple(gluings), charts)
    glued = {(g.cell_a, g.facet_a) for g in gluings} | {
        (g.cell_b, g.facet_b) for g in gluings
    }
    boundary = frozenset(
        (ci, fi)
        for ci in range(len(cells))
        for fi in range(len(facet_index_tuples(cells[ci])))
        if (ci, fi) not in glued
    )
    discriminant = []
    lookup = _facet_lookup(c)
    for locus in c.discriminant:
        facets = _facet_tuples(c)[locus.cell]
        fi = next(i for i, f in enumerate(facets) if f == tuple(locus.face))
        gi, _ = lookup[(locus.cell, fi)]
        if gi in old_gluing_index and locus.cell in new_index:
            discriminant.append(replace(locus, cell=new_index[locus.cell]))
    pl_struct = None
    if c.pl is not None:
        site_fans = {site: fi for fi, fan in enumerate(fans) for site, _ in fan.members}
        old_values: dict[Site, dict[Vec, int]] = {}
        for fi_old, fan in enumerate(c.fans):
            vals = c.pl.values[fi_old]
            for site, pairs in fan.members:
                old_values[site] = {fan.rays[ri]: vals[ri] for _, ri in pairs}
        values = []
        ok = True
        for fan in fans:
            per_ray: dict[Vec, int] = {}
            for (ci, vi), pairs in fan.members:
                old_site = (kept[ci], vi)
                for t, ri in pairs:
                    ray = fan.rays[ri]
                    value = old_values[old_site].get(ray)
                    if value is None:
                        ok = False
                    elif per_ray.setdefault(ray, value) != value:
                        ok = False
            if not ok:
                break
            values.append(tuple(per_ray[r] for r in fan.rays))
        if ok:
            pl_struct = MultivaluedPL(tuple(values))
    return TropicalComplex(
        cells, tuple(gluings), fans, tuple(discriminant), pl_struct, boundary
    )


# ---------------------------------------------------------------------------
# products with an interval and a circle
# ---------------------------------------------------------------------------

def _product_data(c: TropicalComplex, length: int):
    _ensure_valid(c)
    if c.dim != 2:
        raise ValueError("products are built over plane complexes")
    if length < 1:
        raise ValueError("the interval needs positive length")
    segment = LatticePolytope([(0,), (length,)])
    cells = tuple(polytope_product(cell, segment) for cell in c.cells)
    fan_data = _fan_data(c)
    charts: dict[Site, IntMat] = {}
    for ci, cell in enumerate(c.cells):
        block = {
            vi: fan_data[(ci, vi)][1] for vi in range(len(cell.vertices))
        }
        for pi, pv in enumerate(cells[ci].vertices):
            vi = cell.vertices.index(pv[:2])
            a = block[vi]
            charts[(ci, pi)] = (
                (a[0][0], a[0][1], 0),
                (a[1][0], a[1][1], 0),
                (0, 0, 1),
            )
    gluings = []
    for g in c.gluings:
        lin = g.map.linear
        lifted = UnimodularMap(
            (
                (lin[0][0], lin[0][1], 0),
                (lin[1][0], lin[1][1], 0),
                (0, 0, 1),
            ),
            (g.map.translation[0], g.map.translation[1], 0),
        )
        face = _facet_tuples(c)[g.cell_a][g.facet_a]
        base = [c.cells[g.cell_a].vertices[i] for i in face]
        facet_vertices = [v + (z,) for v in base for z in (0, length)]
        gluings.append(
            make_gluing(cells, g.cell_a, facet_vertices, g.cell_b, lifted)
        )
    return cells, gluings, charts


def _lift_pl(c: TropicalComplex, bend: int):
    if c.pl is None:
        return None
    site_values: dict[Site, dict[Vec, int]] = {}
    for fi, fan in enumerate(c.fans):
        vals = c.pl.values[fi]
        for site, pairs in fan.members:
            lifted = {fan.rays[ri] + (0,): vals[ri] for _, ri in pairs}
            lifted[(0, 0, 1)] = bend
            lifted[(0, 0, -1)] = bend
            site_values[site] = lifted
    return site_values


def product_with_interval(
    c: TropicalComplex, length: int = 1, bend: int = 1
) -> TropicalComplex:
    """The cylinder over a plane complex, one cell thick.

    Every cell, gluing and chart is lifted with a trivial vertical
    factor; top and bottom become boundary. Each discriminant point
    stretches to a vertical segment of the same multiplicity, which the
    assembly rederives from monodromy rather than copying. A potential
    is extended with the given bend on the two vertical rays, keeping
    it strictly convex.
    """
    cells, gluings, charts = _product_data(c, length)
    pl = _lift_pl(c, bend)
    lifted_sites = {}
    if pl is not None:
        for ci in range(len(c.cells)):
            for pi, pv in enumerate(cells[ci].vertices):
                vi = c.cells[ci].vertices.index(pv[:2])
                base = dict(pl[(ci, vi)])
                if pv[2] == 0:
                    base.pop((0, 0, -1))
                else:
                    base.pop((0, 0, 1))
                lifted_sites[(ci, pi)] = base
    return assemble_complex(
        cells, gluings, charts, pl=lifted_sites if pl is not None else None
    )


def product_with_circle(
    c: TropicalComplex, length: int = 1, bend: int = 1
) -> TropicalComplex:
    """The product of a plane complex with a circle of the given length.

    Built like the cylinder, then the top of every cell is glued back
    to its own bottom by a vertical translation. Discriminant points
    become closed vertical circles.
    """
    cells, gluings, charts = _product_data(c, length)
    shift = UnimodularMap(_eye(3), (0, 0, -length))
    for ci, cell in enumerate(c.cells):
        top = [v for v in cells[ci].vertices if v[2] == length]
        gluings.append(make_gluing(cells, ci, top, ci, shift))
    pl = _lift_pl(c, bend)
    lifted_sites = {}
    if pl is not None:
        for ci in range(len(c.cells)):
            for pi, pv in enumerate(cells[ci].vertices):
                vi = c.cells[ci].vertices.index(pv[:2])
                lifted_sites[(ci, pi)] = dict(pl[(ci, vi)])
    return assemble_complex(
        cells, gluings, charts, pl=lifted_sites if pl is not None else None
    )
