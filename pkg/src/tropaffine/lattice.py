"""Exact primitives for lattice geometry.

Vectors are tuples of integers (or Fractions where a computation genuinely
leaves the lattice), matrices are tuples of rows, and every operation is
exact. Nothing in this package touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from itertools import combinations, product as _cartesian
from math import gcd
from typing import Iterable, Sequence

Vec = tuple[int, ...]
IntMat = tuple[tuple[int, ...], ...]
QVec = tuple[Fraction, ...]
QMat = tuple[tuple[Fraction, ...], ...]

Number = "int | Fraction"


# ---------------------------------------------------------------------------
# integer vectors
# ---------------------------------------------------------------------------

def vadd(u: Sequence, v: Sequence) -> tuple:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def vsub(u: Sequence, v: Sequence) -> tuple:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def vneg(u: Sequence) -> tuple:
    return tuple(-a for a in u)


def vscale(c, u: Sequence) -> tuple:
    return tuple(c * a for a in u)


def vdot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v, strict=True))


def content(v: Sequence[int]) -> int:
    """Greatest common divisor of the entries; zero for the zero vector."""
    g = 0
    for a in v:
        g = gcd(g, abs(a))
    return g


def primitive(v: Sequence[int]) -> Vec:
    """Divide an integer vector by its content.

    Raises ValueError on the zero vector, which has no primitive direction.
    """
    g = content(v)
    if g == 0:
        raise ValueError("the zero vector has no primitive representative")
    return tuple(a // g for a in v)


def affine_length(a: Sequence[int], b: Sequence[int]) -> int:
    """Lattice length of the segment from a to b."""
    return content(vsub(b, a))


def det2(u: Sequence, v: Sequence):
    return u[0] * v[1] - u[1] * v[0]


def cross3(u: Sequence, v: Sequence) -> tuple:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def det3(u: Sequence, v: Sequence, w: Sequence):
    return vdot(u, cross3(v, w))


def outward_normal2(edge: Sequence[int]) -> Vec:
    """Primitive outward normal of an edge vector of a counterclockwise polygon."""
    return primitive((edge[1], -edge[0]))


def _lower_half(v: Sequence) -> int:
    # 0 for the closed upper half plane starting at the positive x axis
    if v[1] > 0 or (v[1] == 0 and v[0] > 0):
        return 0
    return 1


def _ccw_cmp(u: Sequence, v: Sequence) -> int:
    hu, hv = _lower_half(u), _lower_half(v)
    if hu != hv:
        return -1 if hu < hv else 1
    c = det2(u, v)
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


def ccw_sorted(vectors: Iterable[Sequence]) -> list:
    """Sort nonzero plane vectors counterclockwise starting from the positive x axis."""
    return sorted(vectors, key=cmp_to_key(_ccw_cmp))


def pseudo_angle(v: Sequence) -> Fraction:
    """Exact monotone stand-in for the angle of a nonzero plane vector.

    Strictly increasing with the true angle, starts at 0 on the positive
    x axis, and one full counterclockwise turn advances it by exactly 4.
    Antipodal vectors differ by exactly 2, which is what makes exact turn
    counting possible without trigonometry.
    """
    x, y = v
    if x > 0 and y >= 0:
        return Fraction(y, x + y)
    if x <= 0 and y > 0:
        return 1 + Fraction(-x, y - x)
    if x < 0 and y <= 0:
        return 2 + Fraction(-y, -x - y)
    if x >= 0 and y < 0:
        return 3 + Fraction(x, x - y)
    raise ValueError("the zero vector has no angle")


def turn_fraction(p: Sequence, q: Sequence) -> Fraction:
    """Signed turn from direction p to direction q in quarter turns.

    Lies in (-2, 2); the sign matches det2(p, q). Opposite directions have
    no well defined turn and raise ValueError.
    """
    d = det2(p, q)
    if d == 0:
        if vdot(p, q) <= 0:
            raise ValueError("turn between opposite directions is ambiguous")
        return Fraction(0)
    delta = (pseudo_angle(q) - pseudo_angle(p)) % 4
    if d > 0:
        assert 0 < delta < 2
        return delta
    assert 2 < delta < 4
    return delta - 4


def bounding_box(points: Sequence[Sequence[int]]) -> tuple[Vec, Vec]:
    dim = len(points[0])
    lo = tuple(min(p[i] for p in points) for i in range(dim))
    hi = tuple(max(p[i] for p in points) for i in range(dim))
    return lo, hi


def box_lattice_points(lo: Sequence[int], hi: Sequence[int]):
    yield from _cartesian(*(range(a, b + 1) for a, b in zip(lo, hi, strict=True)))


# ---------------------------------------------------------------------------
# exact rational matrices
# ---------------------------------------------------------------------------

def qmat(rows: Sequence[Sequence]) -> QMat:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def qmat_identity(n: int) -> QMat:
    return tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)
    )


def qmat_mul(a: QMat, b: QMat) -> QMat:
    n, k, m = len(a), len(b), len(b[0])
    assert all(len(row) == k for row in a)
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m))
        for i in range(n)
    )


def qmat_vec(a: QMat, v: Sequence) -> tuple:
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in a)


def qmat_det(a: Sequence[Sequence]) -> Fraction:
    m = [[Fraction(x) for x in row] for row in a]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = Fraction(1) / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] * inv
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def qmat_inv(a: Sequence[Sequence]) -> QMat:
    """Exact inverse via Gauss-Jordan elimination. Raises ValueError if singular."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(1 if i == j else 0) for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        inv = Fraction(1) / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(tuple(row[n:]) for row in m)


def qmat_is_integral(a: QMat) -> bool:
    return all(x.denominator == 1 for row in a for x in row)


def qmat_to_int(a: QMat) -> IntMat:
    if not qmat_is_integral(a):
        raise ValueError("matrix has non integer entries")
    return tuple(tuple(int(x) for x in row) for row in a)


def qrank(rows: Sequence[Sequence]) -> int:
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return 0
    rank = 0
    ncols = len(m[0])
    for col in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = Fraction(1) / m[rank][col]
        for r in range(rank + 1, len(m)):
            if m[r][col] != 0:
                f = m[r][col] * inv
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def affine_rank(points: Sequence[Sequence[int]]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    return qrank([vsub(p, base) for p in points[1:]])


def solve_linear_map(pairs: Sequence[tuple[Sequence, Sequence]], dim: int) -> QMat:
    """Find the unique linear map sending each input vector to its output.

    The inputs must span the ambient space and the assignment must be
    consistent; otherwise a ValueError explains which condition failed.
    The result is an exact rational matrix and need not be integral.
    """
    sel: list[int] = []
    for i, (x, _) in enumerate(pairs):
        if qrank([pairs[j][0] for j in sel] + [x]) > len(sel):
            sel.append(i)
        if len(sel) == dim:
            break
    if len(sel) < dim:
        raise ValueError("input vectors do not span the space")
    # columns of X are the selected inputs, columns of Y the matching outputs
    x_cols = tuple(tuple(pairs[j][0][i] for j in sel) for i in range(dim))
    y_cols = tuple(tuple(pairs[j][1][i] for j in sel) for i in range(dim))
    result = qmat_mul(qmat(y_cols), qmat_inv(x_cols))
    for x, y in pairs:
        if qmat_vec(result, x) != tuple(Fraction(t) for t in y):
            raise ValueError("assignment is not realised by any linear map")
    return result


# ---------------------------------------------------------------------------
# unimodular affine maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnimodularMap:
    """An affine isomorphism of the lattice, x maps to A x + b with det A = +-1."""

    linear: IntMat
    translation: Vec

    def __post_init__(self):
        n = len(self.linear)
        if any(len(row) != n for row in self.linear):
            raise ValueError("linear part must be square")
        if len(self.translation) != n:
            raise ValueError("translation dimension mismatch")
        if abs(qmat_det(self.linear)) != 1:
            raise ValueError("linear part must have determinant +1 or -1")

    @classmethod
    def identity(cls, dim: int) -> "UnimodularMap":
        lin = tuple(tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim))
        return cls(lin, (0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.linear)

    @property
    def det(self) -> int:
        return int(qmat_det(self.linear))

    def apply(self, p: Sequence[int]) -> Vec:
        return vadd(self.apply_vector(p), self.translation)

    def apply_vector(self, v: Sequence[int]) -> Vec:
        return tuple(vdot(row, v) for row in self.linear)

    def compose(self, other: "UnimodularMap") -> "UnimodularMap":
        """self after other."""
        lin = qmat_to_int(qmat_mul(qmat(self.linear), qmat(other.linear)))
        tr = vadd(self.apply_vector(other.translation), self.translation)
        return UnimodularMap(lin, tr)

    def inverse(self) -> "UnimodularMap":
        lin = qmat_to_int(qmat_inv(self.linear))
        tr = vneg(tuple(vdot(row, self.translation) for row in lin))
        return UnimodularMap(lin, tr)


# ---------------------------------------------------------------------------
# lattice polytopes
# ---------------------------------------------------------------------------

def _hull2d(pts: list[Vec]) -> list[Vec]:
    # Andrew's monotone chain on lexicographically sorted unique points.
    # Returns the strict hull counterclockwise starting at the smallest point.
    def half(points):
        h: list[Vec] = []
        for p in points:
            while len(h) >= 2 and det2(vsub(h[-1], h[-2]), vsub(p, h[-2])) <= 0:
                h.pop()
            h.append(p)
        return h

    lower = half(pts)
    upper = half(pts[::-1])
    return lower[:-1] + upper[:-1]


class LatticePolytope:
    """Convex hull of finitely many lattice points, stored exactly.

    The constructor reduces the input to the hull's vertex set. For a two
    dimensional polytope in the plane the vertices are stored
    counterclockwise starting from the lexicographically smallest one, so
    equal polytopes produce identical vertex tuples. For a two dimensional
    polytope inside a three dimensional lattice the vertices form a cycle
    whose orientation depends on an internal coordinate projection. Ambient
    dimensions one to three are supported, which covers every model built
    here.
    """

    __slots__ = (
        "vertices", "ambient_dim", "dim",
        "_planes", "_proj2", "_proj2_cycle", "_cycles", "_points", "_interior",
    )

    def __init__(self, points: Iterable[Sequence[int]]):
        pts = sorted({tuple(int(x) for x in p) for p in points})
        if not pts:
            raise ValueError("a polytope needs at least one point")
        dims = {len(p) for p in pts}
        if len(dims) != 1:
            raise ValueError("points of mixed ambient dimension")
        self.ambient_dim = dims.pop()
        if self.ambient_dim not in (1, 2, 3):
            raise ValueError("only ambient dimensions 1, 2, 3 are supported")
        self.dim = affine_rank(pts)
        self._planes = None
        self._proj2 = None
        self._proj2_cycle = None
        self._cycles = None
        self._points = None
        self._interior = None
        self.vertices = self._hull_vertices(pts)

    # -- construction ------------------------------------------------------

    def _hull_vertices(self, pts: list[Vec]) -> tuple[Vec, ...]:
        if self.dim == 0:
            return (pts[0],)
        if self.dim == 1:
            # lexicographic order is monotone along a line
            return (pts[0], pts[-1])
        if self.dim == 2:
            if self.ambient_dim == 2:
                return tuple(_hull2d(pts))
            return self._hull_2_in_3(pts)
        return self._hull3d(pts)

    def _hull_2_in_3(self, pts: list[Vec]) -> tuple[Vec, ...]:
        base = pts[0]
        diffs = [vsub(p, base) for p in pts[1:]]
        for pair in ((0, 1), (0, 2), (1, 2)):
            if qrank([(d[pair[0]], d[pair[1]]) for d in diffs]) == 2:
                self._proj2 = pair
                break
        lookup = {(p[self._proj2[0]], p[self._proj2[1]]): p for p in pts}
        cycle = _hull2d(sorted(lookup))
        self._proj2_cycle = tuple(cycle)
        return tuple(lookup[q] for q in cycle)

    def _hull3d(self, pts: list[Vec]) -> tuple[Vec, ...]:
        planes: set[tuple[Vec, int]] = set()
        for a, b, c in combinations(pts, 3):
            nrm = cross3(vsub(b, a), vsub(c, a))
            if nrm == (0, 0, 0):
                continue
            nrm = primitive(nrm)
            off = vdot(nrm, a)
            vals = [vdot(nrm, p) - off for p in pts]
            if all(v <= 0 for v in vals):
                planes.add((nrm, off))
            if all(v >= 0 for v in vals):
                planes.add((vneg(nrm), -off))
        self._planes = tuple(sorted(planes))
        verts = []
        for p in pts:
            active = [n for n, c in self._planes if vdot(n, p) == c]
            if qrank(active) == 3:
                verts.append(p)
        return tuple(verts)

    # -- basic data --------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LatticePolytope)
            and self.ambient_dim == other.ambient_dim
            and sorted(self.vertices) == sorted(other.vertices)
        )

    def __hash__(self) -> int:
        return hash((self.ambient_dim, tuple(sorted(self.vertices))))

    def __repr__(self) -> str:
        return f"LatticePolytope({list(self.vertices)!r})"

    def facet_planes(self) -> tuple[tuple[Vec, int], ...]:
        """Outward supporting planes (normal, offset) of a solid polytope."""
        if self.dim != 3:
            raise ValueError("facet planes are defined for solid polytopes")
        return self._planes

    def facet_cycles(self) -> tuple[tuple[Vec, ...], ...]:
        """Vertex cycles of the two dimensional faces of a solid polytope."""
        if self.dim != 3:
            raise ValueError("facet cycles are defined for solid polytopes")
        if self._cycles is None:
            cycles = []
            for nrm, off in self._planes:
                face = [v for v in self.vertices if vdot(nrm, v) == off]
                drop = max(range(3), key=lambda i: abs(nrm[i]))
                keep = tuple(i for i in range(3) if i != drop)
                lookup = {(v[keep[0]], v[keep[1]]): v for v in face}
                cycles.append(tuple(lookup[q] for q in _hull2d(sorted(lookup))))
            self._cycles = tuple(cycles)
        return self._cycles

    def edges(self) -> tuple[tuple[Vec, Vec], ...]:
        """Vertex pairs spanning the one dimensional faces."""
        if self.dim == 0:
            return ()
        if self.dim == 1:
            return (self.vertices,)
        if self.dim == 2:
            n = len(self.vertices)
            return tuple(
                (self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)
            )
        seen = set()
        out = []
        for cycle in self.facet_cycles():
            n = len(cycle)
            for i in range(n):
                key = frozenset((cycle[i], cycle[(i + 1) % n]))
                if key not in seen:
                    seen.add(key)
                    out.append(tuple(sorted(key)))
        return tuple(sorted(out))

    def vertex_tangents(self, v: Sequence[int]) -> tuple[Vec, ...]:
        """Primitive directions of the edges leaving a given vertex."""
        v = tuple(v)
        if v not in self.vertices:
            raise ValueError(f"{v} is not a vertex")
        out = set()
        for a, b in self.edges():
            if a == v:
                out.add(primitive(vsub(b, a)))
            elif b == v:
                out.add(primitive(vsub(a, b)))
        return tuple(sorted(out))

    # -- measures ----------------------------------------------------------

    def area2(self) -> int:
        """Twice the Euclidean area of a plane polygon (an integer)."""
        if self.dim != 2 or self.ambient_dim != 2:
            raise ValueError("area2 needs a polygon in the plane")
        vs = self.vertices
        return sum(det2(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))

    def volume6(self) -> int:
        """Six times the Euclidean volume of a solid polytope (an integer)."""
        if self.dim != 3:
            raise ValueError("volume6 needs a solid polytope")
        v0 = self.vertices[0]
        total = 0
        for cycle in self.facet_cycles():
            if v0 in cycle:
                continue
            a = cycle[0]
            for i in range(1, len(cycle) - 1):
                total += abs(det3(vsub(a, v0), vsub(cycle[i], v0), vsub(cycle[i + 1], v0)))
        return total

    # -- membership and point enumeration ----------------------------------

    def contains(self, point: Sequence, strict: bool = False) -> bool:
        """Exact membership test; with strict=True, relative interior membership.

        The point may have integer or Fraction coordinates.
        """
        p = tuple(Fraction(x) for x in point)
        if len(p) != self.ambient_dim:
            raise ValueError("point dimension mismatch")
        if self.dim == 0:
            return p == tuple(Fraction(x) for x in self.vertices[0])
        if self.dim == 1:
            a, b = self.vertices
            d = vsub(b, a)
            i = next(i for i in range(len(d)) if d[i] != 0)
            t = (p[i] - a[i]) / d[i]
            if tuple(ai + t * di for ai, di in zip(a, d)) != p:
                return False
            return (0 < t < 1) if strict else (0 <= t <= 1)
        if self.dim == 2:
            if self.ambient_dim == 2:
                return self._contains_poly2(p, self.vertices, strict)
            base = self.vertices[0]
            if qrank([vsub(v, base) for v in self.vertices[1:]] + [vsub(p, base)]) != 2:
                return False
            q = (p[self._proj2[0]], p[self._proj2[1]])
            return self._contains_poly2(q, self._proj2_cycle, strict)
        for nrm, off in self._planes:
            val = vdot(nrm, p)
            if val > off or (strict and val == off):
                return False
        return True

    @staticmethod
    def _contains_poly2(p, cycle, strict: bool) -> bool:
        n = len(cycle)
        for i in range(n):
            a, b = cycle[i], cycle[(i + 1) % n]
            c = det2(vsub(b, a), vsub(p, a))
            if c < 0 or (strict and c == 0):
                return False
        return True

    def lattice_points(self) -> tuple[Vec, ...]:
        if self._points is None:
            lo, hi = bounding_box(self.vertices)
            self._points = tuple(
                p for p in box_lattice_points(lo, hi) if self.contains(p)
            )
        return self._points

    def interior_lattice_points(self) -> tuple[Vec, ...]:
        """Lattice points in the relative interior."""
        if self._interior is None:
            self._interior = tuple(
                p for p in self.lattice_points() if self.contains(p, strict=True)
            )
        return self._interior

    def boundary_lattice_points(self) -> tuple[Vec, ...]:
        interior = set(self.interior_lattice_points())
        return tuple(p for p in self.lattice_points() if p not in interior)

    def boundary_cycle(self) -> tuple[Vec, ...]:
        """All boundary lattice points of a plane polygon in cyclic order.

        Walks the counterclockwise vertex cycle and fills in the lattice
        points interior to each edge, so consecutive entries always differ
        by a primitive vector. Degenerates to the point list ordered along
        the segment when the polytope is one dimensional.
        """
        if self.ambient_dim != 2:
            raise ValueError("boundary_cycle needs ambient dimension 2")
        if self.dim == 1:
            a, b = self.vertices
            step = primitive(vsub(b, a))
            n = affine_length(a, b)
            return tuple(vadd(a, vscale(t, step)) for t in range(n + 1))
        if self.dim != 2:
            raise ValueError("boundary_cycle needs a segment or a polygon")
        out = []
        m = len(self.vertices)
        for i in range(m):
            a, b = self.vertices[i], self.vertices[(i + 1) % m]
            step = primitive(vsub(b, a))
            for t in range(affine_length(a, b)):
                out.append(vadd(a, vscale(t, step)))
        return tuple(out)

    def pick_interior_count(self) -> int:
        """Interior point count of a plane polygon by Pick's formula.

        Kept separate from the enumeration so the two can cross check each
        other in tests.
        """
        if self.dim != 2 or self.ambient_dim != 2:
            raise ValueError("Pick's formula needs a polygon in the plane")
        boundary = sum(
            affine_length(a, b) for a, b in self.edges()
        )
        value = self.area2() - boundary + 2
        if value % 2 != 0 or value < 0:
            raise ArithmeticError("Pick count came out non integral")
        return value // 2

    # -- transforms ---------------------------------------------------------

    def translate(self, v: Sequence[int]) -> "LatticePolytope":
        return LatticePolytope([vadd(p, v) for p in self.vertices])

    def transform(self, f: UnimodularMap) -> "LatticePolytope":
        return LatticePolytope([f.apply(p) for p in self.vertices])


def polytope_product(p: LatticePolytope, q: LatticePolytope) -> LatticePolytope:
    """Cartesian product, with the coordinates of p first."""
    return LatticePolytope([a + b for a in p.vertices for b in q.vertices])


# ---------------------------------------------------------------------------
# triangles
# ---------------------------------------------------------------------------

def _as_triangle(t) -> LatticePolytope:
    tri = t if isinstance(t, LatticePolytope) else LatticePolytope(t)
    if tri.ambient_dim != 2 or tri.dim != 2 or len(tri.vertices) != 3:
        raise ValueError("expected a nondegenerate lattice triangle in the plane")
    return tri


def interior_point_count(t) -> int:
    """Number of lattice points strictly inside a plane triangle.

    Computed twice, by Pick's identity and by enumeration over the bounding
    box; the two counts must agree or an ArithmeticError is raised. Accepts
    a LatticePolytope or a bare triple of points.
    """
    tri = _as_triangle(t)
    by_pick = tri.pick_interior_count()
    by_enumeration = len(tri.interior_lattice_points())
    if by_pick != by_enumeration:
        raise ArithmeticError(
            f"Pick count {by_pick} disagrees with enumeration {by_enumeration}"
        )
    return by_pick


def is_standard_triangle(t) -> bool:
    """Whether a plane triangle has the minimal normalized area.

    True exactly when the determinant of two edge vectors is +-1, so the
    triangle is a unimodular image of conv{0, e1, e2}.
    """
    tri = _as_triangle(t)
    a, b, c = tri.vertices
    return abs(det2(vsub(b, a), vsub(c, a))) == 1
