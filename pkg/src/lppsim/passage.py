"""Exact passage times, geodesics, crossings, and interval statistics.

All operations are pure given an immutable WeightField.  Sweeps accumulate
in a fixed order, so repeated runs are bit-identical; the path-weight
convention excludes the source vertex, which turns two-piece concatenation
into an identity rather than an inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import BudgetError
from .geometry import AntiDiagonal, LatticePoint, SourceInterval, phi, psi
from .weights import WeightField

DEFAULT_BITMAP_BUDGET_BITS = 2**31


@dataclass(frozen=True)
class PassageResult:
    value: float
    argmax_endpoint: LatticePoint | None = None


@dataclass(frozen=True)
class Geodesic:
    """Up/right path from source to target attaining the passage time."""

    vertices: tuple

    def __len__(self):
        return len(self.vertices)

    @property
    def source(self) -> LatticePoint:
        return self.vertices[0]

    @property
    def target(self) -> LatticePoint:
        return self.vertices[-1]

    def weight(self, field: WeightField) -> float:
        """Sum of vertex weights excluding the source."""
        from .weights import weight_at

        return sum(weight_at(field, p) for p in self.vertices[1:])


def _check_order(u, v):
    if v[0] < u[0] or v[1] < u[1]:
        raise ValueError(f"target {tuple(v)} does not dominate source {tuple(u)}")
    if u[0] < 0 or u[1] < 0:
        raise ValueError(f"source {tuple(u)} outside the first quadrant")


def _check_budget(dx, dy, budget_bits):
    stride_bits = ((dx + 1 + 63) // 64) * 64
    need = stride_bits * (dy + 1)
    if need > budget_bits:
        raise BudgetError(
            f"direction bitmap needs {need} bits, budget is {budget_bits}; "
            "use passage_time for values only"
        )
    return ((dx + 1 + 63) // 64) * (dy + 1)


def passage_time(field: WeightField, u, v) -> PassageResult:
    """Last passage time from u to v (source weight excluded)."""
    _check_order(u, v)
    if u[0] == v[0] and u[1] == v[1]:
        return PassageResult(0.0)
    val = _k.pp_value(field.key, u[0], u[1], v[0] - u[0], v[1] - u[1])
    return PassageResult(float(val))


def geodesic(field: WeightField, u, v, budget_bits: int = DEFAULT_BITMAP_BUDGET_BITS) -> Geodesic:
    """The maximizing path from u to v under the deterministic tie-break
    (on exact ties the horizontal predecessor wins)."""
    _check_order(u, v)
    dx, dy = v[0] - u[0], v[1] - u[1]
    words = _check_budget(dx, dy, budget_bits)
    bits = np.zeros(words, np.uint64)
    _k.pp_value_and_bits(field.key, u[0], u[1], dx, dy, bits)
    rel = _k.backtrack_bits(bits, dx, dy)
    return Geodesic(tuple(LatticePoint(u[0] + int(a), u[1] + int(b)) for a, b in rel))


def passage_to_line(field: WeightField, u, line: AntiDiagonal) -> PassageResult:
    """Max passage time from u to the quadrant part of the anti-diagonal,
    plus the maximizing endpoint (ties toward the smaller-psi endpoint)."""
    if u[0] < 0 or u[1] < 0:
        raise ValueError(f"source {tuple(u)} outside the first quadrant")
    if line.double_level < phi(u):
        raise ValueError(f"line {line} lies behind the source {tuple(u)}")
    if line.double_level == phi(u):
        return PassageResult(0.0, LatticePoint(u[0], u[1]))
    val, ax, ay = _k.ptl_value(field.key, u[0], u[1], line.double_level)
    return PassageResult(float(val), LatticePoint(int(ax), int(ay)))


def geodesic_to_line(field: WeightField, u, line: AntiDiagonal,
                     budget_bits: int = DEFAULT_BITMAP_BUDGET_BITS) -> Geodesic:
    """The maximizing path from u to the line, ending at the argmax endpoint."""
    if u[0] < 0 or u[1] < 0:
        raise ValueError(f"source {tuple(u)} outside the first quadrant")
    if line.double_level < phi(u):
        raise ValueError(f"line {line} lies behind the source {tuple(u)}")
    depth = line.double_level - phi(u)
    if depth == 0:
        return Geodesic((LatticePoint(u[0], u[1]),))
    words = _check_budget(depth, depth, 2 * DEFAULT_BITMAP_BUDGET_BITS if budget_bits is None else budget_bits)
    bits = np.zeros(words, np.uint64)
    val, ax, ay = _k.ptl_value_and_bits(field.key, u[0], u[1], line.double_level, bits)
    # backtrack within the triangle using the rectangle conventions: the
    # argmax endpoint is at relative (ax-ux, ay-uy) with row stride of the
    # first (widest) row
    dx_rel, dy_rel = int(ax) - u[0], int(ay) - u[1]
    stride = (depth + 1 + 63) >> 6
    length = dx_rel + dy_rel + 1
    verts = []
    x, y = dx_rel, dy_rel
    for _ in range(length):
        verts.append(LatticePoint(u[0] + x, u[1] + y))
        if x > 0 and (y == 0 or (int(bits[y * stride + (x >> 6)]) >> (x & 63)) & 1):
            x -= 1
        elif y > 0:
            y -= 1
    return Geodesic(tuple(reversed(verts)))


def crossing(g: Geodesic, line: AntiDiagonal) -> LatticePoint:
    """The unique vertex of g on the anti-diagonal."""
    lo = phi(g.vertices[0])
    hi = phi(g.vertices[-1])
    if not lo <= line.double_level <= hi:
        raise ValueError(f"line level {line.double_level} outside the geodesic's range [{lo}, {hi}]")
    return g.vertices[line.double_level - lo]


def sup_from_interval(field: WeightField, sources: SourceInterval, v) -> PassageResult:
    """sup over interval sources of the passage time to v, in one sweep."""
    pts = list(sources)
    reachable = [p for p in pts if p[0] <= v[0] and p[1] <= v[1]]
    if not reachable:
        raise ValueError("target does not dominate any interval source")
    if phi(v) <= phi(pts[0]):
        raise ValueError("target must lie strictly beyond the interval's line")
    ex = min(p[0] for p in reachable)
    ey = min(p[1] for p in reachable)
    src_col = np.full(v[1] - ey + 1, -1, np.int64)
    for p in reachable:
        src_col[p[1] - ey] = p[0] - ex
    val = _k.multi_source_value(field.key, src_col, ex, ey, v[0], v[1])
    return PassageResult(float(val))


def inf_from_interval(field: WeightField, sources: SourceInterval, target_line: AntiDiagonal) -> float:
    """inf over interval sources of the point-to-line passage time.

    Runs one sweep per source: infima do not propagate through max-plus
    recurrences, and intervals stay small (tens of points).
    """
    if target_line.double_level <= phi(next(iter(sources))):
        raise ValueError("target line must lie strictly beyond the interval")
    best = np.inf
    for p in sources:
        r = passage_to_line(field, p, target_line)
        if r.value < best:
            best = r.value
    return float(best)


def midpoint_displacement(field: WeightField, n: int,
                          budget_bits: int = DEFAULT_BITMAP_BUDGET_BITS) -> int:
    """|psi| of the crossing of the geodesic 0 -> (n,n) with {x+y=n}."""
    if n % 2 != 0:
        raise ValueError("midpoint displacement needs even n")
    g = geodesic(field, LatticePoint(0, 0), LatticePoint(n, n), budget_bits)
    return abs(psi(crossing(g, AntiDiagonal(n))))


def geodesic_csv_rows(g: Geodesic):
    """Rows (x, y, phi, psi) for CSV export."""
    for p in g.vertices:
        yield p.x, p.y, phi(p), psi(p)
