"""Brute-force ground truth by exhaustive path enumeration.

The oracle enumerates every monotone path by recursive descent with a
running sum; it shares nothing with the sweep engine except the weight
generator, and is deliberately kept stupid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import _kernels as _k
from .errors import BudgetError
from .geometry import AntiDiagonal, LatticePoint, phi
from .weights import WeightField, weights_block

MAX_ORACLE_STEPS = 24  # C(24,12) ~ 2.7e6 paths


@dataclass(frozen=True)
class OracleBudget:
    max_steps: int = 12

    def __post_init__(self):
        if not 1 <= self.max_steps <= MAX_ORACLE_STEPS:
            raise ValueError(f"max_steps must lie in [1, {MAX_ORACLE_STEPS}]")


def brute_passage(field: WeightField, u, v, budget: OracleBudget) -> float:
    """Maximum path weight u -> v over all C(dx+dy, dx) monotone paths,
    source weight excluded."""
    dx, dy = v[0] - u[0], v[1] - u[1]
    if dx < 0 or dy < 0:
        raise ValueError("target must dominate source")
    if dx + dy > budget.max_steps:
        raise BudgetError(f"{dx + dy} steps exceed the oracle budget {budget.max_steps}")
    if dx == 0 and dy == 0:
        return 0.0
    wb = weights_block(field, u[0], u[1], dx + 1, dy + 1)
    return float(_k.brute_max_rec(wb, 0, 0, dx, dy, 0.0))


def brute_to_line(field: WeightField, u, line: AntiDiagonal, budget: OracleBudget):
    """(max value, argmax endpoint) over quadrant endpoints on the line,
    ties toward the smaller-psi endpoint."""
    depth = line.double_level - phi(u)
    if depth < 0:
        raise ValueError("line lies behind the source")
    if depth > budget.max_steps:
        raise BudgetError(f"{depth} steps exceed the oracle budget {budget.max_steps}")
    best = None
    best_pt = None
    for y in range(u[1], u[1] + depth + 1):  # ascending psi
        x = line.double_level - y
        val = brute_passage(field, u, LatticePoint(x, y), budget)
        if best is None or val > best:
            best = val
            best_pt = LatticePoint(x, y)
    return best, best_pt


@lru_cache(maxsize=None)
def path_count(dx: int, dy: int) -> int:
    """Number of monotone paths, by the same recursion the oracle walks."""
    if dx == 0 or dy == 0:
        return 1
    return path_count(dx - 1, dy) + path_count(dx, dy - 1)
