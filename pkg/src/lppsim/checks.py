"""Randomized engine-vs-oracle battery behind the oracle-check command."""

from __future__ import annotations

import random

from .errors import AcceptanceFailure
from .geometry import AntiDiagonal, LatticePoint, phi
from .oracle import OracleBudget, brute_passage, brute_to_line
from .passage import geodesic, geodesic_to_line, passage_time, passage_to_line
from .weights import WeightField

REL_TOL = 1e-9


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b), 1.0)
    return abs(a - b) / scale


def oracle_check(max_steps: int = 12, trials: int = 500, seed: int = 1) -> dict:
    """Compare the sweep engine against exhaustive enumeration.

    Per trial (one random field and source): every rectangle shape with
    dx+dy <= max_steps gets passage_time and geodesic weight checked against
    brute_passage; one random line depth gets passage_to_line checked
    against brute_to_line including the argmax endpoint.  Raises
    AcceptanceFailure on any disagreement beyond 1e-9 relative.
    """
    budget = OracleBudget(max_steps)
    rng = random.Random(seed)
    shapes = [(dx, dy) for dx in range(max_steps + 1) for dy in range(max_steps + 1 - dx)]
    compared = 0
    worst = 0.0
    for trial in range(trials):
        field = WeightField(master_seed=rng.getrandbits(63), replicate=rng.getrandbits(16))
        u = LatticePoint(rng.randrange(0, 8), rng.randrange(0, 8))
        for dx, dy in shapes:
            v = LatticePoint(u.x + dx, u.y + dy)
            want = brute_passage(field, u, v, budget)
            got = passage_time(field, u, v).value
            err = _rel_err(want, got)
            worst = max(worst, err)
            if err > REL_TOL:
                raise AcceptanceFailure(
                    f"passage_time {got} vs oracle {want} at u={tuple(u)}, v={tuple(v)}, "
                    f"seed={field.master_seed}")
            g = geodesic(field, u, v)
            gw = g.weight(field)
            err = _rel_err(want, gw)
            worst = max(worst, err)
            if err > REL_TOL:
                raise AcceptanceFailure(
                    f"geodesic weight {gw} vs oracle {want} at u={tuple(u)}, v={tuple(v)}")
            compared += 2
        depth = rng.randrange(1, max_steps + 1)
        line = AntiDiagonal(phi(u) + depth)
        want_v, want_pt = brute_to_line(field, u, line, budget)
        got_r = passage_to_line(field, u, line)
        err = _rel_err(want_v, got_r.value)
        worst = max(worst, err)
        if err > REL_TOL or got_r.argmax_endpoint != want_pt:
            raise AcceptanceFailure(
                f"passage_to_line ({got_r.value}, {got_r.argmax_endpoint}) vs oracle "
                f"({want_v}, {want_pt}) at u={tuple(u)}, depth={depth}")
        gl = geodesic_to_line(field, u, line)
        if gl.target != want_pt:
            raise AcceptanceFailure(
                f"geodesic_to_line endpoint {gl.target} vs oracle argmax {want_pt}")
        compared += 2
    return {"trials": trials, "max_steps": max_steps, "comparisons": compared,
            "max_rel_err": worst}
