"""Monte Carlo estimators for geodesic-deviation probabilities.

Every estimator is a deterministic function of (master seed, replicate
range, parameters).  Replicates are evaluated by compiled batch kernels
that return one integer or float statistic per replicate; events are
thresholds on those statistics, so a single sweep serves every parameter
value of an experiment.

Threshold conventions (recorded on each EventKind):
  corollary scaling   psi(crossing) compared against psi of the scaled
                      target point, i.e. 2*floor(t*n^(2/3)) at the midpoint
                      and 2*floor(t*(2n)^(2/3)) at the endpoint; "lies
                      above" is the weak inequality unless strict is set.
  intro scaling       |psi| >= t * n^(2/3) (resp. (2n)^(2/3)) with the
                      unfloored real threshold.
  weight deviations   4n + s*2^(4/3)*n^(1/3) for the point-to-point upper
                      tail, 4n +/- s*n^(1/3) for line-sup tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterable

import numpy as np
from scipy import stats as _sps

from . import _kernels as _k
from .weights import WeightField

_U64 = np.uint64

# statistic families computed by the batch kernels
FAMILY_MID = "mid"            # psi_mid
FAMILY_ENDLINE = "endline"    # psi_end, sup_line
FAMILY_PROFILE = "profile"    # psi_mid, psi_end, sup_line, t_pp (shared sweeps)
FAMILY_SQUARE = "square"      # t_pp
FAMILY_GAMMA_COUNT = "gamma_count"
FAMILY_END_COUNT = "end_count"
FAMILY_INTERVAL_INF = "interval_inf"


@dataclass(frozen=True)
class EventKind:
    """A named indicator on one replicate statistic, with its scaling."""

    name: str
    param: float
    convention: str
    strict: bool = False
    delta: float | None = None
    gamma: float | None = None

    def describe(self) -> str:
        return f"{self.name}({self.param:g}; {self.convention})"


def midpoint_above(t: float, strict: bool = False) -> EventKind:
    return EventKind("MIDPOINT_ABOVE", t, "corollary: psi >= 2*floor(t*n^(2/3))", strict)


def endpoint_above(t: float, strict: bool = False) -> EventKind:
    return EventKind("ENDPOINT_ABOVE", t, "corollary: psi >= 2*floor(t*(2n)^(2/3))", strict)


def midpoint_deviation(t: float) -> EventKind:
    return EventKind("MIDPOINT_DEVIATION", t, "intro: |psi| >= t*n^(2/3)")


def endpoint_deviation(t: float) -> EventKind:
    return EventKind("ENDPOINT_DEVIATION", t, "intro: |psi| >= t*(2n)^(2/3)")


def exact_mid_hit(t: float) -> EventKind:
    return EventKind("EXACT_MID_HIT", t, "psi == 2*floor(t*n^(2/3))")


def exact_end_hit(t: float) -> EventKind:
    return EventKind("EXACT_END_HIT", t, "psi == 2*floor(t*(2n)^(2/3))")


def passage_upper(s: float) -> EventKind:
    return EventKind("PASSAGE_UPPER", s, "T >= 4n + s*2^(4/3)*n^(1/3)")


def line_sup_upper(s: float) -> EventKind:
    return EventKind("LINE_SUP_UPPER", s, "sup >= 4n + s*n^(1/3)")


def line_sup_lower(s: float) -> EventKind:
    return EventKind("LINE_SUP_LOWER", s, "sup <= 4n - s*n^(1/3)")


def interval_inf_lower(s: float, delta: float) -> EventKind:
    return EventKind("INTERVAL_INF_LOWER", s, "inf <= 4n - s*n^(1/3)", delta=delta)


_KIND_FAMILY = {
    "MIDPOINT_ABOVE": FAMILY_MID,
    "MIDPOINT_DEVIATION": FAMILY_MID,
    "EXACT_MID_HIT": FAMILY_MID,
    "ENDPOINT_ABOVE": FAMILY_ENDLINE,
    "ENDPOINT_DEVIATION": FAMILY_ENDLINE,
    "EXACT_END_HIT": FAMILY_ENDLINE,
    "LINE_SUP_UPPER": FAMILY_ENDLINE,
    "LINE_SUP_LOWER": FAMILY_ENDLINE,
    "PASSAGE_UPPER": FAMILY_SQUARE,
    "INTERVAL_INF_LOWER": FAMILY_INTERVAL_INF,
}

_MID_KINDS = {"MIDPOINT_ABOVE", "MIDPOINT_DEVIATION", "EXACT_MID_HIT"}


def kind_family(kind: EventKind) -> str:
    return _KIND_FAMILY[kind.name]


def validate_kind(kind: EventKind, n: int) -> None:
    if kind.name not in _KIND_FAMILY:
        raise ValueError(f"unknown event kind {kind.name!r}")
    if kind.name in _MID_KINDS and n % 2 != 0:
        raise ValueError(f"{kind.name} needs even n, got {n}")
    if kind.name == "INTERVAL_INF_LOWER" and kind.delta is None:
        raise ValueError("INTERVAL_INF_LOWER needs delta")


# ---------------------------------------------------------------------------
# chunk evaluation
# ---------------------------------------------------------------------------


def evaluate_chunk(family: str, master_seed: int, lo: int, hi: int, n: int,
                   *, gamma: float | None = None, t: float = 0.0,
                   half_width: int | None = None) -> dict:
    """Raw per-replicate statistics for replicates [lo, hi)."""
    m = hi - lo
    seed = _U64(master_seed)
    out: dict = {}
    if family == FAMILY_MID:
        psi_mid = np.empty(m, np.int64)
        _k.mid_psi_batch(seed, lo, hi, n, psi_mid)
        out["psi_mid"] = psi_mid
    elif family in (FAMILY_ENDLINE, FAMILY_PROFILE):
        want_mid = family == FAMILY_PROFILE
        psi_mid = np.zeros(m, np.int64)
        psi_end = np.empty(m, np.int64)
        sup_line = np.empty(m, np.float64)
        t_pp = np.empty(m, np.float64)
        _k.profile_batch(seed, lo, hi, n, want_mid, psi_mid, psi_end, sup_line, t_pp)
        out["psi_end"] = psi_end
        out["sup_line"] = sup_line
        out["t_pp"] = t_pp
        if want_mid:
            out["psi_mid"] = psi_mid
    elif family == FAMILY_SQUARE:
        t_pp = np.empty(m, np.float64)
        _k.pp_value_batch(seed, lo, hi, n, t_pp)
        out["t_pp"] = t_pp
    elif family == FAMILY_GAMMA_COUNT:
        if gamma is None or half_width is None:
            raise ValueError("gamma counting needs gamma and half_width")
        gn = gamma * n
        if abs(gn - round(gn)) > 1e-9:
            raise ValueError(f"gamma*n = {gn} must be an integer")
        disp = math.floor(t * float(n) ** (2.0 / 3.0))
        counts = np.empty(m, np.int64)
        _k.gamma_hits_batch(seed, lo, hi, n, int(round(gn)), disp, half_width, counts)
        out["counts"] = counts
    elif family == FAMILY_END_COUNT:
        if half_width is None:
            raise ValueError("endpoint counting needs half_width")
        disp = math.floor(t * (2.0 * n) ** (2.0 / 3.0))
        counts = np.empty(m, np.int64)
        _k.end_hits_batch(seed, lo, hi, n, disp, half_width, counts)
        out["counts"] = counts
    elif family == FAMILY_INTERVAL_INF:
        if half_width is None:
            raise ValueError("interval inf needs half_width")
        inf_vals = np.empty(m, np.float64)
        _k.interval_inf_batch(seed, lo, hi, n, half_width, inf_vals)
        out["interval_inf"] = inf_vals
    else:
        raise ValueError(f"unknown family {family!r}")
    return out


def indicator(kind: EventKind, n: int, stats: dict) -> np.ndarray:
    """Boolean per-replicate indicator of the event."""
    name = kind.name
    if name in ("MIDPOINT_ABOVE", "EXACT_MID_HIT", "MIDPOINT_DEVIATION"):
        psi = stats["psi_mid"]
        if name == "MIDPOINT_DEVIATION":
            return np.abs(psi) >= kind.param * float(n) ** (2.0 / 3.0)
        thr = 2 * math.floor(kind.param * float(n) ** (2.0 / 3.0))
        if name == "EXACT_MID_HIT":
            return psi == thr
        return psi > thr if kind.strict else psi >= thr
    if name in ("ENDPOINT_ABOVE", "EXACT_END_HIT", "ENDPOINT_DEVIATION"):
        psi = stats["psi_end"]
        if name == "ENDPOINT_DEVIATION":
            return np.abs(psi) >= kind.param * (2.0 * n) ** (2.0 / 3.0)
        thr = 2 * math.floor(kind.param * (2.0 * n) ** (2.0 / 3.0))
        if name == "EXACT_END_HIT":
            return psi == thr
        return psi > thr if kind.strict else psi >= thr
    if name == "PASSAGE_UPPER":
        return stats["t_pp"] >= 4.0 * n + kind.param * 2.0 ** (4.0 / 3.0) * float(n) ** (1.0 / 3.0)
    if name == "LINE_SUP_UPPER":
        return stats["sup_line"] >= 4.0 * n + kind.param * float(n) ** (1.0 / 3.0)
    if name == "LINE_SUP_LOWER":
        return stats["sup_line"] <= 4.0 * n - kind.param * float(n) ** (1.0 / 3.0)
    if name == "INTERVAL_INF_LOWER":
        return stats["interval_inf"] <= 4.0 * n - kind.param * float(n) ** (1.0 / 3.0)
    raise ValueError(f"unknown event kind {name!r}")


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------


@dataclass
class EventEstimate:
    """Mergeable Monte Carlo summary of one event (or counting) estimator."""

    kind_name: str
    n: int
    param: float
    trials: int
    successes: int
    weight_sum: float
    confidence: float
    p_hat: float = 0.0
    ci_low: float = 0.0
    ci_high: float = 1.0
    convention: str = ""
    interval_size: int = 0
    delta: float | None = None
    count_hist: dict = dc_field(default_factory=dict)
    count_sq_sum: int = 0

    def descriptor(self) -> tuple:
        return (self.kind_name, self.n, self.param, self.confidence,
                self.convention, self.interval_size, self.delta)

    def finalize(self) -> "EventEstimate":
        """Recompute p_hat and the confidence interval from the sums."""
        if self.interval_size:
            r = self.trials
            mean = self.weight_sum / r
            var = max(self.count_sq_sum / r - mean * mean, 0.0)
            se = math.sqrt(var / r) if r > 1 else float("inf")
            z = _sps.norm.ppf(0.5 + self.confidence / 2.0)
            self.p_hat = mean / self.interval_size
            self.ci_low = max((mean - z * se) / self.interval_size, 0.0)
            self.ci_high = min((mean + z * se) / self.interval_size, 1.0)
        else:
            self.p_hat = self.successes / self.trials if self.trials else 0.0
            self.ci_low, self.ci_high = binomial_ci(self.successes, self.trials, self.confidence)
        return self

    @property
    def p_hat_paper(self) -> float:
        """Counting estimate under the paper normalization 2*delta*n^(2/3)."""
        if not self.interval_size or self.delta is None:
            raise ValueError("paper normalization applies to interval counting only")
        return self.weight_sum / (self.trials * 2.0 * self.delta * float(self.n) ** (2.0 / 3.0))


def merge(a: EventEstimate, b: EventEstimate) -> EventEstimate:
    """Combine two estimates of the same event over disjoint replicates."""
    if a.descriptor() != b.descriptor():
        raise ValueError(f"incompatible estimates: {a.descriptor()} vs {b.descriptor()}")
    hist = dict(a.count_hist)
    for k, v in b.count_hist.items():
        hist[k] = hist.get(k, 0) + v
    out = EventEstimate(
        kind_name=a.kind_name, n=a.n, param=a.param,
        trials=a.trials + b.trials,
        successes=a.successes + b.successes,
        weight_sum=a.weight_sum + b.weight_sum,
        confidence=a.confidence, convention=a.convention,
        interval_size=a.interval_size, delta=a.delta,
        count_hist=hist, count_sq_sum=a.count_sq_sum + b.count_sq_sum,
    )
    return out.finalize()


def empty_estimate(kind: EventKind, n: int, confidence: float,
                   interval_size: int = 0, delta: float | None = None) -> EventEstimate:
    return EventEstimate(
        kind_name=kind.name, n=n, param=kind.param, trials=0, successes=0,
        weight_sum=0.0, confidence=confidence, convention=kind.convention,
        interval_size=interval_size, delta=delta,
    )


def binomial_ci(successes: int, trials: int, confidence: float) -> tuple[float, float]:
    """Two-sided interval for a binomial proportion.

    Wilson score interval, switching to exact Clopper-Pearson when either
    count is at most 5 (where the normal approximation is worst).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    alpha = 1.0 - confidence
    if successes <= 5 or trials - successes <= 5:
        low = 0.0 if successes == 0 else float(_sps.beta.ppf(alpha / 2, successes, trials - successes + 1))
        high = 1.0 if successes == trials else float(_sps.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
        return low, high
    z = float(_sps.norm.ppf(1 - alpha / 2))
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


# ---------------------------------------------------------------------------
# single-call estimators (library surface; the harness drives the same
# pieces with chunking, checkpoints, and worker threads)
# ---------------------------------------------------------------------------


def estimate_event(kind: EventKind, n: int, replicates: range,
                   field: WeightField, confidence: float = 0.95,
                   chunk: int = 4096) -> EventEstimate:
    """Estimate one deviation event over a replicate index range."""
    validate_kind(kind, n)
    if len(replicates) == 0:
        raise ValueError("empty replicate range")
    family = kind_family(kind)
    half_width = None
    if family == FAMILY_INTERVAL_INF:
        half_width = interval_half_width(n, kind.param, kind.delta)
    est = empty_estimate(kind, n, confidence)
    lo, hi = replicates.start, replicates.stop
    for c0 in range(lo, hi, chunk):
        c1 = min(c0 + chunk, hi)
        stats = evaluate_chunk(family, field.master_seed, c0, c1, n, half_width=half_width)
        ind = indicator(kind, n, stats)
        est.trials += c1 - c0
        est.successes += int(np.count_nonzero(ind))
    est.weight_sum = float(est.successes)
    return est.finalize()


def interval_half_width(n: int, t: float, delta: float | None = None) -> int:
    """Half-width in lattice steps of the source interval.

    With delta given: floor(delta * n^(2/3)).  Default delta follows
    0.1/max(t,1), capped so the interval never exceeds 63 points; degenerate
    intervals raise.
    """
    scale = float(n) ** (2.0 / 3.0)
    if delta is not None:
        h = math.floor(delta * scale)
    else:
        h = min(math.floor(0.1 / max(t, 1.0) * scale), 31)
    if h < 1:
        raise ValueError(f"degenerate interval at n={n}, t={t}, delta={delta}")
    return h


def estimate_interval_count(kind: str, n: int, t: float, delta: float | None,
                            replicates: range, field: WeightField,
                            confidence: float = 0.95, gamma: float = 0.5,
                            chunk: int = 4096) -> EventEstimate:
    """Counting estimator over an interval of sources.

    kind "ENDPOINT_SET": per replicate, the number of interval sources whose
    point-to-line geodesic ends at the source plus the scaled endpoint.
    kind "GAMMA_SET": sources whose point-to-point geodesic passes through
    the source plus the scaled intermediate target.

    The source interval sits on the quadrant diagonal (shift (h, h)), which
    leaves every probability unchanged by translation invariance.  p_hat
    averages the counts over trials * interval size; the per-replicate count
    histogram is kept (counts within a replicate are correlated, so the CI
    uses the replicate-level sample variance).
    """
    if kind not in ("ENDPOINT_SET", "GAMMA_SET"):
        raise ValueError(f"unknown counting kind {kind!r}")
    if len(replicates) == 0:
        raise ValueError("empty replicate range")
    hw = interval_half_width(n, t, delta)
    eff_delta = delta if delta is not None else (hw + 0.5) / float(n) ** (2.0 / 3.0)
    size = 2 * hw + 1
    family = FAMILY_END_COUNT if kind == "ENDPOINT_SET" else FAMILY_GAMMA_COUNT
    ek = EventKind(kind, t, "interval count", gamma=gamma if kind == "GAMMA_SET" else None)
    est = empty_estimate(ek, n, confidence, interval_size=size, delta=eff_delta)
    lo, hi = replicates.start, replicates.stop
    for c0 in range(lo, hi, chunk):
        c1 = min(c0 + chunk, hi)
        stats = evaluate_chunk(family, field.master_seed, c0, c1, n,
                               gamma=gamma, t=t, half_width=hw)
        counts = stats["counts"]
        est.trials += c1 - c0
        est.successes += int(np.count_nonzero(counts))
        est.weight_sum += float(counts.sum())
        est.count_sq_sum += int((counts * counts).sum())
        vals, freq = np.unique(counts, return_counts=True)
        for v, f in zip(vals.tolist(), freq.tolist()):
            est.count_hist[v] = est.count_hist.get(v, 0) + f
    return est.finalize()
