"""Legendre duality for potentials on integral affine complexes.

The dual of a complex carrying a multivalued potential has one maximal
cell per vertex class with a complete fan: the Newton polytope of the
potential there, whose vertices are the cone gradients. Two dual cells
are glued along the facets dual to each interior edge joining their
vertex classes, and the corner charts of the dual are the transposes of
the primal corner charts, so the fan of a dual vertex becomes the
normal fan of the primal cell it names. The dual potential is the
support function of that cell, which makes the construction an
involution: dualizing twice returns the original complex up to integral
affine isomorphism.

Vertex classes whose fans are incomplete, which only happens along the
boundary, are not dualized; the corresponding dual facets stay
boundary. The discriminant of the dual is derived from its own
monodromy, never transported.
"""

from __future__ import annotations

from .lattice import (
    LatticePolytope,
    UnimodularMap,
    Vec,
    primitive,
    vdot,
    vsub,
)
from .complexes import (
    TropicalComplex,
    assemble_complex,
    make_gluing,
    _check_fan_cones,
    _cone_gradient,
    _edge_class_on_boundary,
    _ensure_valid,
    _face_classes,
    _face_site_key,
    _fan_data,
    _imat_inv,
    _imat_mul,
    _mat_vec,
    _vertex_classes,
)


def _transpose(m):
    return tuple(tuple(col) for col in zip(*m))


def _fan_is_complete(fan, dim: int) -> bool:
    return not _check_fan_cones(fan, True, dim, "fan")


def _normal_cones(cell: LatticePolytope) -> dict[int, tuple[Vec, ...]]:
    """Rays of the normal cone at each vertex, by vertex index."""
    if cell.ambient_dim == 2:
        verts = cell.vertices
        n = len(verts)
        edge_normals = []
        for i in range(n):
            d = vsub(verts[(i + 1) % n], verts[i])
            edge_normals.append(primitive((d[1], -d[0])))
        return {
            i: (edge_normals[(i - 1) % n], edge_normals[i]) for i in range(n)
        }
    out: dict[int, tuple[Vec, ...]] = {}
    planes = cell.facet_planes()
    for vi, v in enumerate(cell.vertices):
        rays = tuple(
            primitive(nrm) for nrm, off in planes if vdot(nrm, v) == off
        )
        out[vi] = rays
    return out


def _support_value(cell: LatticePolytope, ray: Vec) -> int:
    return max(vdot(ray, v) for v in cell.vertices)


def dualizable_classes(c: TropicalComplex) -> tuple[int, ...]:
    """Indices of the vertex classes whose fans are complete."""
    _ensure_valid(c)
    classes, site_to_class = _vertex_classes(c)
    fan_data = _fan_data(c)
    out = []
    for k, cls in enumerate(classes):
        fan = c.fans[fan_data[cls[0]][0]]
        if _fan_is_complete(fan, c.dim):
            out.append(k)
    return tuple(out)


def legendre_dual(c: TropicalComplex) -> TropicalComplex:
    """The Legendre dual of a complex with a multivalued potential.

    Raises ValueError when the complex is invalid (in particular when
    the potential fails strict convexity), carries no potential, has no
    complete fan to dualize, or when a cone gradient is not integral or
    a Newton polytope is lower dimensional, since then no lattice dual
    cell exists. The result is assembled and validated, with its
    discriminant recomputed from its own charts.
    """
    _ensure_valid(c)
    if c.pl is None:
        raise ValueError("Legendre duality needs a multivalued potential")
    classes, site_to_class = _vertex_classes(c)
    fan_data = _fan_data(c)

    dual_index: dict[int, int] = {}
    dual_cells: list[LatticePolytope] = []
    grads_of: dict[int, list[Vec]] = {}
    cone_of_site: dict[tuple[int, int], int] = {}
    fan_of_class: dict[int, int] = {}
    for k, cls in enumerate(classes):
        fi = fan_data[cls[0]][0]
        fan_of_class[k] = fi
        fan = c.fans[fi]
        if not _fan_is_complete(fan, c.dim):
            continue
        values = c.pl.values[fi]
        cone_sets = [frozenset(cone) for cone in fan.cones]
        for site, pairs in fan.members:
            image = frozenset(ri for _, ri in pairs)
            cone_of_site[site] = cone_sets.index(image)
        grads: list[Vec] = []
        for cone in fan.cones:
            g = _cone_gradient(fan.rays, cone, values)
            if g is None or any(x.denominator != 1 for x in g):
                raise ValueError(
                    f"potential gradient at the vertex class of {cls[0]} is "
                    f"not integral; there is no lattice dual cell"
                )
            grads.append(tuple(int(x) for x in g))
        if len(set(grads)) != len(grads):
            raise ValueError(
                f"potential at the vertex class of {cls[0]} repeats a "
                f"gradient, so its cones do not separate"
            )
        newton = LatticePolytope(grads)
        if newton.dim != c.dim:
            raise ValueError(
                f"the Newton polytope of the potential at the vertex class "
                f"of {cls[0]} is lower dimensional"
            )
        if set(newton.vertices) != set(grads):
            raise ValueError(
                f"a gradient at the vertex class of {cls[0]} is not a "
                f"vertex of the Newton polytope"
            )
        dual_index[k] = len(dual_cells)
        dual_cells.append(newton)
        grads_of[k] = grads
    if not dual_cells:
        raise ValueError("no vertex class carries a complete fan; nothing to dualize")

    charts: dict[tuple[int, int], tuple] = {}
    pl_sites: dict[tuple[int, int], dict[Vec, int]] = {}
    extra_cones: dict[tuple[int, int], list] = {}
    for k, dk in dual_index.items():
        fan = c.fans[fan_of_class[k]]
        occupant = {}
        cone_sets = [frozenset(cone) for cone in fan.cones]
        for site, pairs in fan.members:
            occupant[cone_sets.index(frozenset(ri for _, ri in pairs))] = site
        newton = dual_cells[dk]
        for ci, grad in enumerate(grads_of[k]):
            dvi = newton.vertices.index(grad)
            site = occupant.get(ci)
            if site is None:
                dim = c.dim
                charts[(dk, dvi)] = tuple(
                    tuple(int(r == s) for s in range(dim)) for r in range(dim)
                )
                pl_sites[(dk, dvi)] = {
                    t: 0 for t in newton.vertex_tangents(grad)
                }
                continue
            chart = fan_data[site][1]
            charts[(dk, dvi)] = _transpose(chart)
            sigma = c.cells[site[0]]
            normals = _normal_cones(sigma)
            missing = [
                normals[u]
                for u in range(len(sigma.vertices))
                if site_to_class[(site[0], u)] not in dual_index
            ]
            if missing:
                extra_cones[(dk, dvi)] = missing
            rays = {r for cone in normals.values() for r in cone}
            pl_sites[(dk, dvi)] = {r: _support_value(sigma, r) for r in rays}

    gluings = []
    edge_classes = _face_classes(c, 1)
    for root in sorted(edge_classes, key=_face_site_key):
        members = edge_classes[root]
        if _edge_class_on_boundary(c, members):
            continue
        cell0, pair0 = members[0]
        i0, j0 = sorted(pair0)
        kv = site_to_class[(cell0, i0)]
        kw = site_to_class[(cell0, j0)]
        if kv not in dual_index or kw not in dual_index:
            continue
        chart_i = fan_data[(cell0, i0)][1]
        chart_j = fan_data[(cell0, j0)][1]
        linear = _transpose(_imat_mul(chart_i, _imat_inv(chart_j)))
        gv = grads_of[kv][cone_of_site[(cell0, i0)]]
        gw = grads_of[kw][cone_of_site[(cell0, j0)]]
        translation = vsub(gw, _mat_vec(linear, gv))
        dual_map = UnimodularMap(linear, translation)
        if kv != kw:
            for cellm, pairm in members:
                im, jm = sorted(pairm)
                if site_to_class[(cellm, im)] != kv:
                    im, jm = jm, im
                gvm = grads_of[kv][cone_of_site[(cellm, im)]]
                gwm = grads_of[kw][cone_of_site[(cellm, jm)]]
                if dual_map.apply(gvm) != gwm:
                    raise ValueError(
                        f"potential is inconsistent around the edge of cell "
                        f"{cellm} through vertices {tuple(sorted(pairm))}: "
                        f"dual facets do not match"
                    )
        tangent = primitive(
            vsub(c.cells[cell0].vertices[j0], c.cells[cell0].vertices[i0])
        )
        ray = tuple(_mat_vec(chart_i, tangent))
        fan_v = c.fans[fan_of_class[kv]]
        ray_idx = fan_v.rays.index(ray)
        facet = [
            grads_of[kv][ci]
            for ci, cone in enumerate(fan_v.cones)
            if ray_idx in cone
        ]
        gluings.append(
            make_gluing(dual_cells, dual_index[kv], facet, dual_index[kw], dual_map)
        )
    return assemble_complex(dual_cells, gluings, charts, pl=pl_sites, extra_cones=extra_cones)
