"""Legal loops, duality, winding numbers, and the 12w identity.

A legal loop relaxes a star configuration: the cyclic list of primitive
vectors may turn through reflex corners and wind any number of times,
as long as consecutive triangles with the origin stay free of interior
lattice points. The sum of edge determinants and normal determinants
then equals twelve times the winding number, and the loop carries a
folded affine surface whose singular-fiber counts this module reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .lattice import (
    Vec,
    content,
    det2,
    primitive,
    turn_fraction,
    vneg,
    vsub,
)

__all__ = [
    "LegalLoop",
    "LoopValidationError",
    "validate_loop",
    "dual_loop",
    "winding_number",
    "twelve_w",
    "TwelveReport",
    "FibrationInvariants",
    "fibration_invariants",
    "FoldedSurfaceReport",
    "folded_surface",
    "concatenate",
    "loop_to_json",
    "loop_from_json",
]


class LoopValidationError(ValueError):
    """A loop condition failed; carries which one and where.

    condition is one of "non-primitive", "repeat", "degenerate-triangle",
    "fat-triangle", "parallel-turn"; index is the first offending
    position.
    """

    def __init__(self, condition: str, index: int, detail: str):
        super().__init__(f"{condition} at index {index}: {detail}")
        self.condition = condition
        self.index = index


@dataclass(frozen=True)
class LegalLoop:
    """Cyclic primitive vectors with empty triangles and honest corners.

    Every consecutive pair must be non-equal, non-opposite, span a
    triangle with the origin that has no interior lattice points, and
    consecutive edge directions must not be parallel (so corners are
    genuine). Determinants of any sign are allowed; a loop is directed
    when they all agree.
    """

    vectors: tuple[Vec, ...]

    def __init__(self, vectors: Iterable[Sequence[int]]):
        vs = tuple(tuple(int(x) for x in v) for v in vectors)
        object.__setattr__(self, "vectors", vs)
        if len(vs) < 3:
            raise ValueError("a loop needs at least three vectors")
        for i, v in enumerate(vs):
            if len(v) != 2:
                raise LoopValidationError("non-primitive", i, f"{v} is not a plane vector")
            if content(v) != 1:
                raise LoopValidationError("non-primitive", i, f"{v} has content != 1")
        m = len(vs)
        for i in range(m):
            a, b = vs[i], vs[(i + 1) % m]
            if a == b:
                raise LoopValidationError("repeat", i, f"{a} repeats")
            d = det2(a, b)
            if d == 0:
                raise LoopValidationError(
                    "degenerate-triangle", i, f"{a} and {b} are collinear with the origin"
                )
            if abs(d) != content(vsub(b, a)):
                raise LoopValidationError(
                    "fat-triangle",
                    i,
                    f"triangle of {a} and {b} has interior lattice points",
                )
        for i in range(m):
            before = vsub(vs[i], vs[i - 1])
            after = vsub(vs[(i + 1) % m], vs[i])
            if det2(before, after) == 0:
                raise LoopValidationError(
                    "parallel-turn", i, f"edges around {vs[i]} are parallel"
                )

    @property
    def m(self) -> int:
        return len(self.vectors)

    @property
    def edge_dets(self) -> tuple[int, ...]:
        vs = self.vectors
        return tuple(det2(vs[i], vs[(i + 1) % self.m]) for i in range(self.m))

    @property
    def tangents(self) -> tuple[Vec, ...]:
        vs = self.vectors
        return tuple(
            primitive(vsub(vs[(i + 1) % self.m], vs[i])) for i in range(self.m)
        )

    @property
    def normals(self) -> tuple[Vec, ...]:
        """Outward primitive normal of each facet conv{v_i, v_{i+1}}.

        The clockwise rotation of the edge tangent when the triangle with
        the origin is positively oriented, the counterclockwise rotation
        otherwise; either way it points away from the origin.
        """
        out = []
        for t, d in zip(self.tangents, self.edge_dets):
            n = (t[1], -t[0])
            out.append(n if d > 0 else vneg(n))
        return tuple(out)

    @property
    def normal_dets(self) -> tuple[int, ...]:
        """det of consecutive outward normals, one entry per vertex."""
        u = self.normals
        return tuple(det2(u[i - 1], u[i]) for i in range(self.m))

    def is_directed(self) -> bool:
        signs = {d > 0 for d in self.edge_dets}
        return len(signs) == 1


def validate_loop(seq: Iterable[Sequence[int]]) -> LegalLoop:
    """Check loop legality; returns the loop or raises the first defect."""
    return LegalLoop(seq)


def dual_loop(loop: LegalLoop) -> LegalLoop:
    """The loop of outward facet normals; legal again, by construction.

    The dual of a directed loop need not be directed. Failure of the
    output to validate would indicate a bug, so the validation error is
    converted into an assertion.
    """
    try:
        return LegalLoop(loop.normals)
    except ValueError as e:
        raise AssertionError(f"dual loop failed validation: {e}") from e


# ---------------------------------------------------------------------------
# winding
# ---------------------------------------------------------------------------

def _winding_by_crossings(vectors: Sequence[Vec]) -> int:
    """Signed crossings of the positive x axis by the closed polyline."""
    w = 0
    m = len(vectors)
    for i in range(m):
        a, b = vectors[i], vectors[(i + 1) % m]
        side = det2(vsub(b, a), vneg(a))
        straddles = (a[1] <= 0 < b[1]) or (a[1] > 0 >= b[1])
        if straddles and side == 0:
            raise ArithmeticError(f"segment {a} to {b} passes through the origin")
        if a[1] <= 0:
            if b[1] > 0 and side > 0:
                w += 1
        else:
            if b[1] <= 0 and side < 0:
                w -= 1
    return w


def _winding_by_turns(vectors: Sequence[Vec]) -> int:
    """Total of exact turn fractions, divided by the four quarter turns."""
    m = len(vectors)
    total = sum(
        turn_fraction(vectors[i], vectors[(i + 1) % m]) for i in range(m)
    )
    if total % 4 != 0:
        raise ArithmeticError(f"turn total {total} is not a whole number of turns")
    return int(total / 4)


def winding_number(loop: LegalLoop) -> int:
    """Winding of the loop around the origin, counterclockwise positive.

    Computed by two independent exact methods, crossing counts and turn
    sums, which must agree.
    """
    by_crossings = _winding_by_crossings(loop.vectors)
    by_turns = _winding_by_turns(loop.vectors)
    if by_crossings != by_turns:
        raise ArithmeticError(
            f"winding oracles disagree: crossings {by_crossings}, turns {by_turns}"
        )
    return by_crossings


# ---------------------------------------------------------------------------
# the 12w identity and fibration data
# ---------------------------------------------------------------------------

class TwelveReport(NamedTuple):
    lhs: int
    w: int
    holds: bool


def twelve_w(loop: LegalLoop) -> TwelveReport:
    """Edge determinants plus normal determinants against 12 x winding."""
    lhs = sum(loop.edge_dets) + sum(loop.normal_dets)
    w = winding_number(loop)
    return TwelveReport(lhs, w, lhs == 12 * w)


@dataclass(frozen=True)
class FibrationInvariants:
    """Singular fiber counts of the torus fibration attached to a loop.

    k_plus and k_minus count positive and negative simple nodal fibers;
    their difference is twelve times the winding number, which forces
    the signature -(2/3)(k_plus - k_minus) to be a multiple of eight.
    """

    k_plus: int
    k_minus: int

    def __post_init__(self):
        if self.k_plus < 0 or self.k_minus < 0:
            raise ValueError("fiber counts cannot be negative")
        if (self.k_plus - self.k_minus) % 12 != 0:
            raise ArithmeticError(
                f"k_plus - k_minus = {self.k_plus - self.k_minus} is not divisible by 12"
            )

    @property
    def euler(self) -> int:
        return self.k_plus + self.k_minus

    @property
    def signature(self) -> Fraction:
        s = Fraction(-2, 3) * (self.k_plus - self.k_minus)
        assert s % 8 == 0
        return s


def fibration_invariants(loop: LegalLoop) -> FibrationInvariants:
    """Count positive and negative nodal fibers from the loop's signs."""
    values = list(loop.edge_dets) + list(loop.normal_dets)
    k_plus = sum(v for v in values if v > 0)
    k_minus = -sum(v for v in values if v < 0)
    return FibrationInvariants(k_plus, k_minus)


# ---------------------------------------------------------------------------
# folded surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldedSurfaceReport:
    """Where the affine surface of a loop folds, and what sits on it.

    fold_indices holds the i where the triangles before and after v_i
    have opposite orientations; the surface folds along the side through
    v_i exactly there, so the set is empty precisely for directed loops.
    vertex_multiplicities[i] is the signed multiplicity det(u_{i-1}, u_i)
    of the singular point on the side through v_i, and
    edge_multiplicities[i] is det(v_i, v_{i+1}) on the side coming from
    the edge between v_i and v_{i+1}.
    """

    fold_indices: frozenset[int]
    vertex_multiplicities: tuple[int, ...]
    edge_multiplicities: tuple[int, ...]


def folded_surface(loop: LegalLoop) -> FoldedSurfaceReport:
    d = loop.edge_dets
    folds = frozenset(
        i for i in range(loop.m) if (d[i - 1] > 0) != (d[i] > 0)
    )
    return FoldedSurfaceReport(folds, loop.normal_dets, d)


# ---------------------------------------------------------------------------
# concatenation
# ---------------------------------------------------------------------------

def concatenate(a: LegalLoop, b: LegalLoop) -> LegalLoop:
    """Join two loops into one; raises if the junction is not legal.

    When it is, winding numbers and the 12w left hand sides both add.
    """
    return LegalLoop(a.vectors + b.vectors)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def loop_to_json(loop: LegalLoop) -> str:
    return json.dumps({"vectors": [list(v) for v in loop.vectors]}, sort_keys=True)


def loop_from_json(text: str) -> LegalLoop:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"loop JSON does not parse: {e}") from None
    if not isinstance(data, dict) or "vectors" not in data:
        raise ValueError('loop JSON needs a "vectors" key')
    vs = data["vectors"]
    if not isinstance(vs, list):
        raise ValueError('"vectors" must be a list')
    for i, v in enumerate(vs):
        if not isinstance(v, list) or len(v) != 2 or not all(isinstance(x, int) for x in v):
            raise ValueError(f"vector {i} is not a pair of integers")
    return LegalLoop(vs)
