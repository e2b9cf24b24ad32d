"""Canonical experiment protocols for the headline estimates.

These configs pin the seeds, sizes, and replicate counts used by the
acceptance suite; running them through the harness is idempotent, so tests
and scripts can share one results directory.  On a 2-core machine the full
set takes several hours (the deviation profile at n=2000 with 1e6
replicates dominates); runs checkpoint every 30 s and resume cleanly.
"""

from __future__ import annotations

import os
from pathlib import Path

from .harness import ExperimentConfig

ACCEPT_SEED = 20260810


def results_dir() -> Path:
    return Path(os.environ.get("LPPSIM_RESULTS", "results"))


def acceptance_configs(output_path: str | None = None, workers: int = 0) -> dict[str, ExperimentConfig]:
    """All experiments the acceptance suite consumes, keyed by id."""
    out = str(output_path if output_path is not None else results_dir())
    mk = lambda **kw: ExperimentConfig(output_path=out, workers=workers,
                                       master_seed=ACCEPT_SEED, **kw)
    return {
        # criterion 3 (shape constant): mean of T/(4n) at n=1000, 2000 reps
        "shape-moments": mk(
            experiment_id="shape-moments", kind="passage-upper",
            n_values=(1000,), s_values=(0.0,), replicates=2000),
        # criterion 4 (chi exponent): std of T over a decade of n
        "passage-moments": mk(
            experiment_id="passage-moments", kind="passage-upper",
            n_values=(250, 500, 1000, 2000), s_values=(0.0,), replicates=2000),
        # criterion 5 (transversal exponent): median |psi| at the midpoint
        "displacement": mk(
            experiment_id="displacement", kind="midpoint-displacement",
            n_values=(250, 512, 1024, 2048), replicates=10_000),
        # criterion 6 (upper-tail exponent): moderate-deviation exceedances
        "passage-upper-tail": mk(
            experiment_id="passage-upper-tail", kind="passage-upper",
            n_values=(1000,), s_values=(0.5, 1.0, 1.5), replicates=100_000),
        # criterion 9a (local probability scaling): interval counts at t=0
        "gamma-counts": mk(
            experiment_id="gamma-counts", kind="gamma-count", gamma=0.5,
            n_values=(512, 1024, 2048), t_values=(0.0,), replicates=2000),
        # criterion 9b (averaging identity): counting vs exact-hit estimators
        "endpoint-count-512": mk(
            experiment_id="endpoint-count-512", kind="endpoint-count",
            n_values=(512,), t_values=(0.5,), delta=0.05, replicates=100_000),
        "exact-end-hit-512": mk(
            experiment_id="exact-end-hit-512", kind="exact-end-hit",
            n_values=(512,), t_values=(0.5,), replicates=400_000),
        # same identity at the midpoint (supporting evidence, cheap)
        "gamma-count-512-t05": mk(
            experiment_id="gamma-count-512-t05", kind="gamma-count", gamma=0.5,
            n_values=(512,), t_values=(0.5,), delta=0.05, replicates=20_000),
        "exact-mid-hit-512": mk(
            experiment_id="exact-mid-hit-512", kind="exact-mid-hit",
            n_values=(512,), t_values=(0.5,), replicates=200_000),
        # criteria 7 and 8 (cubic tails, 8/3 vs 4/3 ordering): one shared-
        # sweep profile job; the long pole of the whole suite
        "profile-2000": mk(
            experiment_id="profile-2000", kind="deviation-profile",
            n_values=(2000,), t_values=(0.7, 0.9, 1.1), replicates=1_000_000),
    }


# jobs ordered so the cheap ones land first; profile-2000 runs last
RUN_ORDER = [
    "shape-moments",
    "passage-moments",
    "displacement",
    "passage-upper-tail",
    "gamma-counts",
    "gamma-count-512-t05",
    "exact-mid-hit-512",
    "exact-end-hit-512",
    "endpoint-count-512",
    "profile-2000",
]
