"""lppsim: exact exponential last passage percolation on the quadrant,
with reproducible Monte Carlo for geodesic-deviation probabilities."""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    AntiDiagonal,
    LatticePoint,
    PointKind,
    SourceInterval,
    centering,
    diag,
    interval_points,
    phi,
    psi,
    scaled_point,
)
from .weights import WeightField, spawn_replicate, weight_at, weights_block  # noqa: F401
from .passage import (  # noqa: F401
    Geodesic,
    PassageResult,
    crossing,
    geodesic,
    geodesic_to_line,
    inf_from_interval,
    midpoint_displacement,
    passage_time,
    passage_to_line,
    sup_from_interval,
)
from .oracle import OracleBudget, brute_passage, brute_to_line  # noqa: F401
from .estimators import (  # noqa: F401
    EventEstimate,
    EventKind,
    binomial_ci,
    estimate_event,
    estimate_interval_count,
    merge,
)
from .fitting import FitResult, fit_cubic, fit_power, variational_constant  # noqa: F401
