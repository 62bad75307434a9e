import pytest
from hypothesis import given, strategies as st

from tropaffine.lattice import LatticePolytope, det2, primitive, vadd
from tropaffine.polygons import (
    ReflexivePolygon,
    StarConfiguration,
    canonical_form,
    catalog_class,
    catalog_entry,
    dual_polygon,
    edge_lengths,
    hirzebruch_star,
    is_reflexive,
    polygon_from_json,
    polygon_to_json,
    reflexive_catalog,
    toric_oracle,
    twelve_sum,
    vertex_orders,
)
from tropaffine.polygons import _hull_chain, _unimodular_chain

P2_VERTICES = ((1, 0), (0, 1), (-1, -1))


# ---------------------------------------------------------------------------
# star configurations
# ---------------------------------------------------------------------------

def test_star_rejects_bad_input():
    with pytest.raises(ValueError, match="three"):
        StarConfiguration([(1, 0), (0, 1)])
    with pytest.raises(ValueError, match="primitive"):
        StarConfiguration([(2, 0), (0, 1), (-1, -1)])
    with pytest.raises(ValueError, match="counterclockwise"):
        StarConfiguration([(0, 1), (1, 0), (-1, -1)])
    with pytest.raises(ValueError, match="interior points"):
        StarConfiguration([(1, 0), (2, 3), (0, -1)])
    doubled = P2_VERTICES + P2_VERTICES
    with pytest.raises(ValueError, match="winds"):
        StarConfiguration(doubled)


def test_star_data_on_a_reflex_example():
    star = hirzebruch_star(3)
    assert star.edge_dets == (1, 1, 1, 1)
    assert star.orders == (2, -1, 2, 5)
    assert not star.is_convex()
    assert twelve_sum(star) == 12


def test_flat_corner_is_allowed():
    star = hirzebruch_star(2)
    assert star.orders == (2, 0, 2, 4)
    assert twelve_sum(star) == 12
    assert toric_oracle(star) == 12


@given(st.integers(min_value=0, max_value=12))
def test_hirzebruch_family_sums_to_twelve(a):
    star = hirzebruch_star(a)
    assert twelve_sum(star) == 12
    assert toric_oracle(star) == 12


def test_toric_oracle_on_smooth_fans():
    assert toric_oracle(StarConfiguration(P2_VERTICES)) == 12
    assert toric_oracle(hirzebruch_star(1)) == 12


# ---------------------------------------------------------------------------
# random stars by refinement and shearing
# ---------------------------------------------------------------------------

_SL2_GENERATORS = (
    ((0, -1), (1, 0)),
    ((1, 1), (0, 1)),
    ((1, -1), (0, 1)),
)


def _mat_vec(m, v):
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


@st.composite
def star_configurations(draw):
    """Random star: refine a catalog star, then shear it around."""
    base = draw(st.sampled_from(range(16)))
    vs = list(catalog_entry(base).vertices)
    for _ in range(draw(st.integers(min_value=0, max_value=5))):
        i = draw(st.integers(min_value=0, max_value=len(vs) - 1))
        w = primitive(vadd(vs[i], vs[(i + 1) % len(vs)]))
        candidate = vs[: i + 1] + [w] + vs[i + 1 :]
        try:
            StarConfiguration(candidate)
        except ValueError:
            continue
        vs = candidate
    for _ in range(draw(st.integers(min_value=0, max_value=4))):
        g = draw(st.sampled_from(_SL2_GENERATORS))
        vs = [_mat_vec(g, v) for v in vs]
    return StarConfiguration(vs)


@given(star_configurations())
def test_random_stars_sum_to_twelve(star):
    assert twelve_sum(star) == 12
    assert toric_oracle(star) == 12


@given(star_configurations())
def test_chain_constructions_are_valid_refinements(star):
    """Mediant and hull chains both smooth the cone; the hull one is minimal."""
    vs = star.vectors
    for i in range(star.m):
        a, b = vs[i], vs[(i + 1) % star.m]
        mediant = _unimodular_chain(a, b)
        hull = _hull_chain(a, b)
        for chain in (mediant, hull):
            assert chain[0] == a and chain[-1] == b
            for w in chain:
                assert det2(a, w) >= 0 and det2(w, b) >= 0
            for p, q in zip(chain, chain[1:]):
                assert det2(p, q) == 1
        assert len(hull) <= len(mediant)


# ---------------------------------------------------------------------------
# reflexivity and duality
# ---------------------------------------------------------------------------

def test_is_reflexive_examples():
    assert is_reflexive(P2_VERTICES)
    assert is_reflexive(LatticePolytope(P2_VERTICES).translate((5, -7)))
    assert not is_reflexive([(1, 0), (0, 1), (-3, -1)])
    assert not is_reflexive([(2, 0), (0, 1), (-1, 0), (0, -1)])
    with pytest.raises(ValueError):
        is_reflexive([(0, 0), (1, 0), (2, 0)])


def test_reflexive_polygon_centers_itself():
    shifted = [(6, -7), (5, -6), (4, -8)]
    P = ReflexivePolygon(shifted)
    assert P.polytope.interior_lattice_points() == ((0, 0),)
    assert P.polytope == LatticePolytope(P2_VERTICES)


def test_reflexive_polygon_rejects_non_reflexive():
    with pytest.raises(ValueError, match="interior points"):
        ReflexivePolygon([(2, 0), (0, 2), (-2, -2)])


def test_dual_of_the_basic_triangle():
    P = ReflexivePolygon(P2_VERTICES)
    assert P.dual().polytope == LatticePolytope([(-1, -1), (2, -1), (-1, 2)])
    assert dual_polygon(P2_VERTICES).polytope == P.dual().polytope


def test_orders_and_lengths_of_the_basic_triangle():
    P = ReflexivePolygon(P2_VERTICES)
    assert P.vertex_orders() == (3, 3, 3)
    assert P.edge_lengths() == (1, 1, 1)
    assert vertex_orders(P2_VERTICES) == (3, 3, 3)
    assert edge_lengths(P2_VERTICES) == (1, 1, 1)


def test_catalog_has_sixteen_classes():
    catalog = reflexive_catalog()
    assert len(catalog) == 16
    assert [e.name for e in catalog] == [f"r{i}" for i in range(16)]
    forms = {canonical_form(e.polytope) for e in catalog}
    assert len(forms) == 16


def test_catalog_is_closed_under_duality_with_four_self_dual():
    catalog = reflexive_catalog()
    pairing = [catalog_class(e.dual()) for e in catalog]
    assert sorted(pairing) == list(range(16))
    assert [pairing[j] for j in pairing] == list(range(16))
    assert sum(1 for i, j in enumerate(pairing) if i == j) == 4


def test_catalog_twelve_and_pick_identities():
    for e in reflexive_catalog():
        star = e.star()
        assert star.is_convex()
        assert twelve_sum(star) == 12
        assert toric_oracle(star) == 12
        assert sum(e.edge_lengths()) + sum(e.dual().edge_lengths()) == 12
        assert e.polytope.area2() == sum(e.edge_lengths())
        assert sorted(e.vertex_orders()) == sorted(e.dual().edge_lengths())


def test_catalog_aliases():
    p2 = catalog_entry("p2")
    assert catalog_class(ReflexivePolygon(P2_VERTICES)) == int(p2.name[1:])
    assert p2.vertex_orders() == (3, 3, 3)
    assert catalog_entry("hexagon").m == 6
    assert catalog_entry("square").edge_lengths() == (2, 2, 2, 2)
    assert catalog_class(catalog_entry("p2").dual()) == int(
        catalog_entry("p2-dual").name[1:]
    )
    assert catalog_entry(0) is reflexive_catalog()[0]
    with pytest.raises(KeyError):
        catalog_entry("p3")
    with pytest.raises(KeyError):
        catalog_entry(16)


def test_catalog_vertex_counts():
    counts = sorted(e.m for e in reflexive_catalog())
    assert counts[0] == 3 and counts[-1] == 6
    assert counts.count(3) == 5
    assert counts.count(4) == 7
    assert counts.count(5) == 3
    assert counts.count(6) == 1


@given(star_configurations())
def test_canonical_form_is_a_unimodular_invariant(star):
    P = LatticePolytope(star.vectors)
    if len(P.vertices) < 3 or P.dim != 2:
        return
    sheared = [_mat_vec(((1, 2), (0, 1)), v) for v in P.vertices]
    assert canonical_form(sheared) == canonical_form(P)


@given(
    st.sampled_from(range(16)),
    st.lists(st.sampled_from(_SL2_GENERATORS + (((0, 1), (1, 0)),)), max_size=12),
)
def test_canonical_form_across_generator_words(index, word):
    P = catalog_entry(index)
    vs = list(P.vertices)
    for g in word:
        vs = [_mat_vec(g, v) for v in vs]
    assert canonical_form(vs) == canonical_form(P.polytope)
    assert catalog_class(ReflexivePolygon(vs)) == index


# ---------------------------------------------------------------------------
# json round trip
# ---------------------------------------------------------------------------

def test_polygon_json_round_trip():
    P = LatticePolytope(P2_VERTICES)
    assert polygon_from_json(polygon_to_json(P)) == P
    assert polygon_to_json(P) == '{"vertices": [[-1, -1], [1, 0], [0, 1]]}'


def test_polygon_json_errors():
    with pytest.raises(ValueError, match="parse"):
        polygon_from_json("{")
    with pytest.raises(ValueError, match="vertices"):
        polygon_from_json('{"points": []}')
    with pytest.raises(ValueError, match="non empty"):
        polygon_from_json('{"vertices": []}')
    with pytest.raises(ValueError, match="vertex 1"):
        polygon_from_json('{"vertices": [[1, 0], [0.5, 1]]}')
