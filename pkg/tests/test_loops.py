import random

import pytest
from hypothesis import given, strategies as st

from helpers import random_legal_loop
from tropaffine.loops import (
    FibrationInvariants,
    LegalLoop,
    LoopValidationError,
    concatenate,
    dual_loop,
    fibration_invariants,
    folded_surface,
    loop_from_json,
    loop_to_json,
    twelve_w,
    validate_loop,
    winding_number,
)
from tropaffine.loops import _winding_by_crossings, _winding_by_turns

P2_LOOP = ((1, 0), (0, 1), (-1, -1))
F3_LOOP = ((1, 0), (0, 1), (-1, 3), (0, -1))
WINDING_ZERO_LOOP = ((1, 0), (0, 1), (-1, 1))


@st.composite
def legal_loops(draw):
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    moves = draw(st.integers(min_value=0, max_value=10))
    return random_legal_loop(random.Random(seed), moves)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_accepts_the_basic_loop():
    loop = validate_loop(P2_LOOP)
    assert loop.vectors == P2_LOOP
    assert loop.is_directed()


def test_validation_diagnostics_name_condition_and_index():
    with pytest.raises(ValueError, match="three"):
        validate_loop([(1, 0), (0, 1)])
    with pytest.raises(LoopValidationError) as e:
        validate_loop([(1, 0), (2, 0), (0, 1)])
    assert (e.value.condition, e.value.index) == ("non-primitive", 1)
    with pytest.raises(LoopValidationError) as e:
        validate_loop([(1, 0), (1, 0), (0, 1)])
    assert (e.value.condition, e.value.index) == ("repeat", 0)
    with pytest.raises(LoopValidationError) as e:
        validate_loop([(1, 0), (-1, 0), (0, 1)])
    assert (e.value.condition, e.value.index) == ("degenerate-triangle", 0)
    with pytest.raises(LoopValidationError) as e:
        validate_loop([(1, 0), (2, 3), (0, 1)])
    assert (e.value.condition, e.value.index) == ("fat-triangle", 0)
    with pytest.raises(LoopValidationError) as e:
        validate_loop([(1, 0), (0, 1), (-1, 2), (0, -1)])
    assert (e.value.condition, e.value.index) == ("parallel-turn", 1)


def test_boundary_points_on_the_far_edge_are_legal():
    """Only interior points disqualify a triangle; (1,1) here is on the edge."""
    loop = validate_loop([(1, 0), (1, 2), (0, 1)])
    assert loop.edge_dets == (2, 1, -1)


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

def test_dual_of_the_basic_loop():
    dual = dual_loop(validate_loop(P2_LOOP))
    assert dual.vectors == ((1, 1), (-2, 1), (1, -2))
    assert dual.is_directed()


def test_dual_of_a_directed_loop_can_fold():
    dual = dual_loop(validate_loop(F3_LOOP))
    assert dual.vectors == ((1, 1), (2, 1), (-4, -1), (1, -1))
    assert not dual.is_directed()
    assert folded_surface(dual).fold_indices == frozenset({1, 0})


def _cyclic_rotations(vs):
    return [vs[i:] + vs[:i] for i in range(len(vs))]


def test_double_dual_is_a_rotation():
    for seq in (P2_LOOP, F3_LOOP):
        loop = validate_loop(seq)
        twice = dual_loop(dual_loop(loop))
        assert twice.vectors in _cyclic_rotations(loop.vectors)


# ---------------------------------------------------------------------------
# winding
# ---------------------------------------------------------------------------

def test_winding_examples():
    assert winding_number(validate_loop(P2_LOOP)) == 1
    assert winding_number(validate_loop(P2_LOOP + P2_LOOP)) == 2
    assert winding_number(validate_loop(tuple(reversed(P2_LOOP)))) == -1
    assert winding_number(validate_loop(WINDING_ZERO_LOOP)) == 0


def test_winding_oracle_rejects_origin_segment():
    with pytest.raises(ArithmeticError, match="origin"):
        _winding_by_crossings([(1, 1), (-1, -1), (0, 1)])


# ---------------------------------------------------------------------------
# the 12w identity
# ---------------------------------------------------------------------------

def test_twelve_w_examples():
    assert twelve_w(validate_loop(P2_LOOP)) == (12, 1, True)
    assert twelve_w(validate_loop(P2_LOOP + P2_LOOP)) == (24, 2, True)
    assert twelve_w(validate_loop(tuple(reversed(P2_LOOP)))) == (-12, -1, True)
    assert twelve_w(validate_loop(F3_LOOP)) == (12, 1, True)
    assert twelve_w(validate_loop(WINDING_ZERO_LOOP)) == (0, 0, True)


def test_fibration_invariants_examples():
    p2 = fibration_invariants(validate_loop(P2_LOOP))
    assert (p2.k_plus, p2.k_minus, p2.euler, p2.signature) == (12, 0, 12, -8)
    f3 = fibration_invariants(validate_loop(F3_LOOP))
    assert (f3.k_plus, f3.k_minus, f3.euler, f3.signature) == (13, 1, 14, -8)
    flat = fibration_invariants(validate_loop(WINDING_ZERO_LOOP))
    assert (flat.k_plus, flat.k_minus, flat.signature) == (3, 3, 0)


def test_fibration_invariants_reject_bad_counts():
    with pytest.raises(ValueError, match="negative"):
        FibrationInvariants(-1, 11)
    with pytest.raises(ArithmeticError, match="12"):
        FibrationInvariants(5, 0)


# ---------------------------------------------------------------------------
# folded surfaces
# ---------------------------------------------------------------------------

def test_folded_surface_examples():
    f3 = folded_surface(validate_loop(F3_LOOP))
    assert f3.fold_indices == frozenset()
    assert f3.vertex_multiplicities == (2, -1, 2, 5)
    assert f3.edge_multiplicities == (1, 1, 1, 1)
    flat = folded_surface(validate_loop(WINDING_ZERO_LOOP))
    assert flat.fold_indices == frozenset({0, 2})
    assert folded_surface(validate_loop(P2_LOOP)).fold_indices == frozenset()


# ---------------------------------------------------------------------------
# concatenation
# ---------------------------------------------------------------------------

def test_concatenation_adds_windings():
    a = validate_loop(P2_LOOP)
    joined = concatenate(a, a)
    assert winding_number(joined) == 2
    assert twelve_w(joined).lhs == 2 * twelve_w(a).lhs
    with pytest.raises(LoopValidationError):
        concatenate(a, validate_loop(tuple(reversed(P2_LOOP))))


# ---------------------------------------------------------------------------
# randomized properties
# ---------------------------------------------------------------------------

@given(legal_loops())
def test_random_loops_satisfy_twelve_w(loop):
    lhs, w, holds = twelve_w(loop)
    assert holds and lhs == 12 * w


@given(legal_loops())
def test_winding_oracles_agree(loop):
    assert _winding_by_crossings(loop.vectors) == _winding_by_turns(loop.vectors)


@given(legal_loops())
def test_fiber_counts_match_winding(loop):
    inv = fibration_invariants(loop)
    assert inv.k_plus - inv.k_minus == 12 * winding_number(loop)
    assert inv.euler == inv.k_plus + inv.k_minus


@given(legal_loops())
def test_dual_loops_validate_and_double_dual_rotates(loop):
    dual = dual_loop(loop)
    assert isinstance(dual, LegalLoop)
    twice = dual_loop(dual)
    assert twice.vectors in _cyclic_rotations(loop.vectors)


@given(legal_loops())
def test_fold_set_empty_iff_directed(loop):
    report = folded_surface(loop)
    assert (len(report.fold_indices) == 0) == loop.is_directed()
    assert len(report.fold_indices) % 2 == 0


@given(legal_loops())
def test_self_concatenation_doubles(loop):
    try:
        joined = concatenate(loop, loop)
    except ValueError:
        return
    assert winding_number(joined) == 2 * winding_number(loop)
    assert twelve_w(joined).lhs == 2 * twelve_w(loop).lhs


# ---------------------------------------------------------------------------
# json
# ---------------------------------------------------------------------------

def test_loop_json_round_trip():
    loop = validate_loop(F3_LOOP)
    assert loop_from_json(loop_to_json(loop)) == loop
    with pytest.raises(ValueError, match="vectors"):
        loop_from_json('{"vertices": [[1, 0]]}')
    with pytest.raises(ValueError, match="vector 0"):
        loop_from_json('{"vectors": [[1], [0, 1]]}')
