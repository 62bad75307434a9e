from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tropaffine.lattice import (
    LatticePolytope,
    UnimodularMap,
    affine_length,
    affine_rank,
    bounding_box,
    ccw_sorted,
    content,
    det2,
    det3,
    interior_point_count,
    is_standard_triangle,
    outward_normal2,
    polytope_product,
    primitive,
    qmat,
    qmat_det,
    qmat_identity,
    qmat_inv,
    qmat_mul,
    qmat_to_int,
    qmat_vec,
    qrank,
    solve_linear_map,
    vadd,
    vsub,
)

coords = st.integers(-9, 9)
vec2 = st.tuples(coords, coords)
vec3 = st.tuples(coords, coords, coords)


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------

def test_content_and_primitive():
    assert content((0, 0)) == 0
    assert content((4, -6)) == 2
    assert primitive((4, -6)) == (2, -3)
    assert primitive((0, 5, 0)) == (0, 1, 0)
    with pytest.raises(ValueError):
        primitive((0, 0, 0))


def test_affine_length():
    assert affine_length((0, 0), (3, 6)) == 3
    assert affine_length((1, 1, 1), (1, 1, 1)) == 0


@given(vec2, vec2)
def test_det2_antisymmetric(u, v):
    assert det2(u, v) == -det2(v, u)


@given(vec3, vec3, vec3)
def test_det3_alternating(u, v, w):
    assert det3(u, v, w) == -det3(v, u, w) == det3(v, w, u)


def test_ccw_sorted_order():
    rays = [(0, -1), (1, 0), (-1, 0), (0, 1), (1, 1), (-2, 1)]
    assert ccw_sorted(rays) == [(1, 0), (1, 1), (0, 1), (-2, 1), (-1, 0), (0, -1)]


def test_outward_normal_of_ccw_square():
    assert outward_normal2((1, 0)) == (0, -1)
    assert outward_normal2((0, 1)) == (1, 0)
    assert outward_normal2((-2, 0)) == (0, 1)


# ---------------------------------------------------------------------------
# rational matrices
# ---------------------------------------------------------------------------

def test_qmat_inverse_known():
    a = qmat([[2, 1], [1, 1]])
    assert qmat_mul(a, qmat_inv(a)) == qmat_identity(2)
    with pytest.raises(ValueError):
        qmat_inv([[1, 2], [2, 4]])


@given(st.lists(vec3, min_size=3, max_size=3))
def test_qmat_inverse_roundtrip(rows):
    if qmat_det(rows) == 0:
        return
    a = qmat(rows)
    assert qmat_mul(a, qmat_inv(a)) == qmat_identity(3)
    assert qmat_mul(qmat_inv(a), a) == qmat_identity(3)


@given(st.lists(vec3, min_size=1, max_size=5))
def test_qrank_bounds(rows):
    r = qrank(rows)
    assert 0 <= r <= min(3, len(rows))
    assert qrank(rows + rows) == r


def test_solve_linear_map_shear():
    pairs = [((1, 0), (1, 0)), ((0, 1), (3, 1))]
    m = solve_linear_map(pairs, 2)
    assert qmat_to_int(m) == ((1, 3), (0, 1))


def test_solve_linear_map_overdetermined_consistent():
    pairs = [((1, 0), (0, 1)), ((0, 1), (-1, 0)), ((1, 1), (-1, 1))]
    m = solve_linear_map(pairs, 2)
    assert qmat_vec(m, (2, 5)) == (Fraction(-5), Fraction(2))


def test_solve_linear_map_errors():
    with pytest.raises(ValueError, match="span"):
        solve_linear_map([((1, 0), (1, 0)), ((2, 0), (2, 0))], 2)
    with pytest.raises(ValueError, match="not realised"):
        solve_linear_map(
            [((1, 0), (1, 0)), ((0, 1), (0, 1)), ((1, 1), (1, 2))], 2
        )


def test_solve_linear_map_non_integral_result():
    m = solve_linear_map([((2, 0), (1, 0)), ((0, 1), (0, 1))], 2)
    assert m[0][0] == Fraction(1, 2)


# ---------------------------------------------------------------------------
# unimodular maps
# ---------------------------------------------------------------------------

def test_unimodular_rejects_bad_det():
    with pytest.raises(ValueError):
        UnimodularMap(((2, 0), (0, 1)), (0, 0))


def test_unimodular_apply_and_compose():
    shear = UnimodularMap(((1, 1), (0, 1)), (5, 0))
    flip = UnimodularMap(((0, 1), (1, 0)), (0, 0))
    assert shear.apply((0, 2)) == (7, 2)
    assert shear.apply_vector((0, 2)) == (2, 2)
    both = flip.compose(shear)
    assert both.apply((0, 2)) == flip.apply(shear.apply((0, 2)))


@st.composite
def unimodular_maps(draw, dim=2):
    m = UnimodularMap.identity(dim)
    for _ in range(draw(st.integers(0, 4))):
        i = draw(st.integers(0, dim - 1))
        j = draw(st.integers(0, dim - 1))
        if i == j:
            continue
        lin = [[1 if a == b else 0 for b in range(dim)] for a in range(dim)]
        lin[i][j] = draw(st.integers(-3, 3))
        m = m.compose(UnimodularMap(tuple(tuple(r) for r in lin), (0,) * dim))
    tr = tuple(draw(st.integers(-5, 5)) for _ in range(dim))
    return UnimodularMap(m.linear, tr)


@given(unimodular_maps(), vec2)
def test_unimodular_inverse_roundtrip(m, p):
    assert m.inverse().apply(m.apply(p)) == p
    assert m.compose(m.inverse()).apply(p) == p


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------

def test_hull_2d_is_ccw_from_lex_min():
    square = LatticePolytope([(1, 1), (0, 0), (1, 0), (0, 1), (0, 0)])
    assert square.vertices == ((0, 0), (1, 0), (1, 1), (0, 1))
    assert square.dim == 2


def test_hull_drops_interior_and_edge_points():
    p = LatticePolytope([(0, 0), (2, 0), (0, 2), (1, 0), (1, 1)])
    assert p.vertices == ((0, 0), (2, 0), (0, 2))


def test_segment_and_point():
    seg = LatticePolytope([(3, 1), (1, 1), (2, 1)])
    assert seg.dim == 1
    assert seg.vertices == ((1, 1), (3, 1))
    pt = LatticePolytope([(5, -2, 7)])
    assert pt.dim == 0
    assert pt.lattice_points() == ((5, -2, 7),)


def test_area_and_pick_for_triangle():
    t = LatticePolytope([(0, 0), (4, 0), (0, 4)])
    assert t.area2() == 16
    assert len(t.interior_lattice_points()) == 3
    assert t.pick_interior_count() == 3
    assert len(t.boundary_lattice_points()) == 12


@given(st.lists(vec2, min_size=3, max_size=8))
def test_pick_matches_enumeration(pts):
    p = LatticePolytope(pts)
    if p.dim != 2:
        return
    assert p.pick_interior_count() == len(p.interior_lattice_points())


@given(st.lists(vec2, min_size=1, max_size=8), unimodular_maps())
def test_lattice_point_count_is_unimodular_invariant(pts, m):
    p = LatticePolytope(pts)
    q = p.transform(m)
    assert len(p.lattice_points()) == len(q.lattice_points())
    assert len(p.interior_lattice_points()) == len(q.interior_lattice_points())
    assert p.dim == q.dim


def test_cube_combinatorics():
    cube = LatticePolytope([(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    assert cube.dim == 3
    assert len(cube.vertices) == 8
    assert len(cube.facet_planes()) == 6
    assert len(cube.edges()) == 12
    assert cube.volume6() == 6
    assert len(cube.lattice_points()) == 8
    assert cube.interior_lattice_points() == ()
    # Euler relation as a sanity check on the face machinery
    assert 8 - 12 + len(cube.facet_cycles()) == 2


def test_simplex_3d():
    s = LatticePolytope([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    assert s.volume6() == 1
    assert len(s.facet_planes()) == 4
    assert s.contains((0, 0, 0))
    assert not s.contains((0, 0, 0), strict=True)
    assert s.contains((Fraction(1, 4), Fraction(1, 4), Fraction(1, 4)), strict=True)
    assert not s.contains((1, 1, 1))


def test_vertex_tangents_square():
    square = LatticePolytope([(0, 0), (2, 0), (2, 2), (0, 2)])
    assert square.vertex_tangents((0, 0)) == ((0, 1), (1, 0))
    with pytest.raises(ValueError):
        square.vertex_tangents((1, 0))


def test_face_in_space():
    face = LatticePolytope([(0, 0, 0), (2, 0, 0), (2, 0, 2), (0, 0, 2)])
    assert face.dim == 2
    assert face.contains((1, 0, 1), strict=True)
    assert not face.contains((1, 1, 1))
    assert len(face.lattice_points()) == 9
    assert face.interior_lattice_points() == ((1, 0, 1),)


def test_segment_relative_interior():
    seg = LatticePolytope([(0, 0, 0), (0, 4, 2)])
    assert seg.contains((0, 2, 1), strict=True)
    assert not seg.contains((0, 0, 0), strict=True)
    assert not seg.contains((0, 2, 2))


def test_product():
    square = LatticePolytope([(0, 0), (1, 0), (1, 1), (0, 1)])
    interval = LatticePolytope([(0,), (3,)])
    prism = polytope_product(square, interval)
    assert prism.dim == 3
    assert prism.volume6() == 18
    assert len(prism.vertices) == 8


@given(st.lists(vec3, min_size=4, max_size=7))
def test_volume_is_unimodular_invariant_3d(pts):
    p = LatticePolytope(pts)
    if p.dim != 3:
        return
    flip = UnimodularMap(((0, 1, 0), (1, 0, 0), (0, 0, 1)), (1, -2, 3))
    q = p.transform(flip)
    assert p.volume6() == q.volume6()
    assert len(p.edges()) == len(q.edges())
    assert len(p.lattice_points()) == len(q.lattice_points())


def test_affine_rank_and_bounding_box():
    assert affine_rank([(0, 0), (1, 1), (2, 2)]) == 1
    assert affine_rank([(1, 2)]) == 0
    assert bounding_box([(0, 5), (3, -1)]) == ((0, -1), (3, 5))


# ---------------------------------------------------------------------------
# triangle helpers and the interior point fact the chart builders rely on
# ---------------------------------------------------------------------------

def test_interior_point_count_examples():
    assert interior_point_count([(0, 0), (1, 0), (0, 1)]) == 0
    assert interior_point_count([(0, 0), (2, 1), (1, 2)]) == 1
    assert interior_point_count([(0, 0), (1, 0), (0, 3)]) == 0
    with pytest.raises(ValueError):
        interior_point_count([(0, 0), (1, 1), (2, 2)])


def test_is_standard_triangle_examples():
    assert is_standard_triangle([(0, 0), (1, 0), (0, 1)])
    assert not is_standard_triangle([(0, 0), (2, 0), (0, 1)])
    assert is_standard_triangle([(0, 0), (1, 1), (-1, 0)])
    with pytest.raises(ValueError):
        is_standard_triangle([(0, 0), (3, 0), (6, 0)])


@given(st.lists(vec2, min_size=3, max_size=3))
def test_standard_triangles_have_no_extra_points(pts):
    p = LatticePolytope(pts)
    if p.dim != 2 or len(p.vertices) != 3:
        return
    if is_standard_triangle(p):
        assert len(p.lattice_points()) == 3


@given(vec2, vec2)
def test_no_interior_points_iff_det_equals_far_edge_content(u, v):
    if content(u) != 1 or content(v) != 1 or det2(u, v) == 0:
        return
    tri = LatticePolytope([(0, 0), u, v])
    hollow = interior_point_count(tri) == 0
    assert hollow == (abs(det2(u, v)) == content(vsub(v, u)))
