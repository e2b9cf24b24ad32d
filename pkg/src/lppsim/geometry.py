"""Integer geometry of the quadrant lattice: points, anti-diagonals, scaled
target points, source intervals, and the deterministic centering term."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple


class LatticePoint(NamedTuple):
    x: int
    y: int

    def __add__(self, other):
        return LatticePoint(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return LatticePoint(self.x - other[0], self.y - other[1])


ORIGIN = LatticePoint(0, 0)


def diag(r: int) -> LatticePoint:
    """The diagonal vertex (r, r)."""
    return LatticePoint(r, r)


def phi(p) -> int:
    """Time-like coordinate x + y."""
    return p[0] + p[1]


def psi(p) -> int:
    """Space-like coordinate y - x."""
    return p[1] - p[0]


def from_phi_psi(ph: int, ps: int) -> LatticePoint:
    """Inverse of (phi, psi); requires matching parity."""
    if (ph + ps) % 2 != 0:
        raise ValueError(f"phi={ph}, psi={ps} have mismatched parity")
    return LatticePoint((ph - ps) // 2, (ph + ps) // 2)


@dataclass(frozen=True)
class AntiDiagonal:
    """The line {x + y = double_level}; stores 2k for L_k so half-integer
    levels stay integral."""

    double_level: int

    def __post_init__(self):
        if self.double_level < 0:
            raise ValueError("anti-diagonal must intersect the quadrant")

    @classmethod
    def through(cls, p) -> "AntiDiagonal":
        return cls(phi(p))

    def contains(self, p) -> bool:
        return phi(p) == self.double_level


class PointKind(enum.Enum):
    MIDPOINT = "midpoint"
    ENDPOINT = "endpoint"
    GAMMA = "gamma"


def scaled_displacement(kind: PointKind, n: int, t: float) -> int:
    """Lattice displacement floor(t * n^(2/3)) resp. floor(t * (2n)^(2/3))."""
    if kind is PointKind.ENDPOINT:
        return math.floor(t * (2.0 * n) ** (2.0 / 3.0))
    return math.floor(t * float(n) ** (2.0 / 3.0))


def scaled_point(kind: PointKind, n: int, t: float, gamma: float | None = None) -> LatticePoint:
    """Scaled deviation target: the anchor (n/2, n/2), (n, n) or (gn, gn)
    displaced by the floored multiple of the transversal scale.

    MIDPOINT -> (n/2 - d, n/2 + d) with d = floor(t n^{2/3}), n even
    ENDPOINT -> (n - d, n + d)     with d = floor(t (2n)^{2/3})
    GAMMA    -> (gn - d, gn + d)   with d = floor(t n^{2/3}), gn = gamma*n integral
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if t < 0:
        raise ValueError("t must be nonnegative")
    d = scaled_displacement(kind, n, t)
    if kind is PointKind.MIDPOINT:
        if n % 2 != 0:
            raise ValueError("midpoint target needs even n")
        anchor = n // 2
    elif kind is PointKind.ENDPOINT:
        anchor = n
    elif kind is PointKind.GAMMA:
        if gamma is None:
            raise ValueError("gamma kind needs an explicit gamma")
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        gn = gamma * n
        if abs(gn - round(gn)) > 1e-9:
            raise ValueError(f"gamma*n = {gn} is not an integer; pick n divisible by the denominator")
        anchor = round(gn)
    else:  # pragma: no cover
        raise ValueError(kind)
    if d > anchor:
        raise ValueError(f"displacement {d} pushes the point out of the quadrant (anchor {anchor})")
    return LatticePoint(anchor - d, anchor + d)


@dataclass(frozen=True)
class SourceInterval:
    """Contiguous integer points on one anti-diagonal, ordered by psi."""

    points: tuple

    def __post_init__(self):
        if not self.points:
            raise ValueError("empty interval")
        phis = {phi(p) for p in self.points}
        if len(phis) > 1:
            raise ValueError("interval points must share an anti-diagonal")
        psis = [psi(p) for p in self.points]
        if any(b - a != 2 for a, b in zip(psis, psis[1:])):
            raise ValueError("interval points must be contiguous in psi with step 2")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def line(self) -> AntiDiagonal:
        return AntiDiagonal.through(self.points[0])

    @property
    def half_width(self) -> int:
        return (len(self.points) - 1) // 2


def interval_points(n: int, delta: float, shift=ORIGIN) -> SourceInterval:
    """The source interval {(x, -x) : |x| <= floor(delta n^{2/3})} + shift.

    Errors when the interval would hold fewer than 3 lattice points; with a
    diagonal shift (h, h), h >= half-width, all points stay in the quadrant.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    h = math.floor(delta * float(n) ** (2.0 / 3.0))
    if h < 1:
        raise ValueError(
            f"degenerate interval: floor(delta*n^(2/3)) = {h}; increase n or delta"
        )
    pts = [LatticePoint(shift[0] + a, shift[1] - a) for a in range(h, -h - 1, -1)]
    return SourceInterval(tuple(pts))


def centering(u, v) -> float:
    """Deterministic centering (sqrt(dx) + sqrt(dy))^2 of the passage time
    from u to v; equals 4n on the diagonal and expands to
    4n - t^2 2^{4/3} n^{1/3} + O(n^{-1/3}) at the scaled endpoint."""
    dx = v[0] - u[0]
    dy = v[1] - u[1]
    if dx < 0 or dy < 0:
        raise ValueError("v must dominate u coordinatewise")
    return (math.sqrt(dx) + math.sqrt(dy)) ** 2
