"""Declarative experiment execution with checkpoint/resume.

An experiment is a JSON config naming a preset kind, a grid of n and
deviation parameters, a replicate count, and a master seed.  Replicates are
processed in fixed-size chunks; chunk results are merged strictly in chunk
order, so the record is a pure function of (config, code version) no matter
how many worker threads ran or where a run was interrupted.

Aggregation state is integer-valued wherever possible (histograms of the
lattice statistics), so threshold events, exact hits, and medians are all
derived exactly from the same accumulated state.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field as dc_field
from importlib import resources
from pathlib import Path
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__
from . import estimators as est
from .errors import ConfigError
from .weights import GENERATOR_ID, GENERATOR_VERSION, WeightField

RECORD_FORMAT = "lppsim-record-v1"
CHECKPOINT_SECONDS = 30.0
CHECKPOINT_REPLICATES = 2**14

CSV_HEADER = "kind,n,param,trials,successes,weight_sum,p_hat,ci_low,ci_high,confidence,seed"

# preset kind -> (statistic family, parameter axis)
KIND_PRESETS = {
    "midpoint-above": (est.FAMILY_MID, "t"),
    "midpoint-deviation": (est.FAMILY_MID, "t"),
    "exact-mid-hit": (est.FAMILY_MID, "t"),
    "midpoint-displacement": (est.FAMILY_MID, None),
    "endpoint-above": (est.FAMILY_ENDLINE, "t"),
    "endpoint-deviation": (est.FAMILY_ENDLINE, "t"),
    "exact-end-hit": (est.FAMILY_ENDLINE, "t"),
    "line-sup-upper": (est.FAMILY_ENDLINE, "s"),
    "line-sup-lower": (est.FAMILY_ENDLINE, "s"),
    "deviation-profile": (est.FAMILY_PROFILE, "t"),
    "passage-upper": (est.FAMILY_SQUARE, "s"),
    "interval-inf-lower": (est.FAMILY_INTERVAL_INF, "s"),
    "gamma-count": (est.FAMILY_GAMMA_COUNT, "t"),
    "endpoint-count": (est.FAMILY_END_COUNT, "t"),
}

_EVENT_BUILDERS = {
    "midpoint-above": est.midpoint_above,
    "midpoint-deviation": est.midpoint_deviation,
    "exact-mid-hit": est.exact_mid_hit,
    "endpoint-above": est.endpoint_above,
    "endpoint-deviation": est.endpoint_deviation,
    "exact-end-hit": est.exact_end_hit,
    "line-sup-upper": est.line_sup_upper,
    "line-sup-lower": est.line_sup_lower,
    "passage-upper": est.passage_upper,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    kind: str
    n_values: tuple
    replicates: int
    master_seed: int
    output_path: str
    t_values: tuple = ()
    s_values: tuple = ()
    delta: float | None = None
    gamma: float | None = None
    confidence: float = 0.95
    workers: int = 0
    chunk_size: int = 1024
    strict: bool = False

    def __post_init__(self):
        if self.kind not in KIND_PRESETS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; known: {sorted(KIND_PRESETS)}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.n_values:
            raise ConfigError("n_values must be nonempty")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")
        family, axis = KIND_PRESETS[self.kind]
        params = self.params()
        if axis is not None and not params:
            raise ConfigError(f"kind {self.kind} needs {axis}_values")
        if self.kind == "gamma-count" and self.gamma is None:
            raise ConfigError("gamma-count needs gamma")
        if self.kind == "interval-inf-lower" and self.delta is None:
            raise ConfigError("interval-inf-lower needs delta")
        for n in self.n_values:
            if n < 2:
                raise ConfigError(f"n={n} too small")
            if family in (est.FAMILY_MID, est.FAMILY_PROFILE) and n % 2 != 0:
                raise ConfigError(f"kind {self.kind} needs even n, got {n}")
            if self.kind == "gamma-count":
                gn = self.gamma * n
                if abs(gn - round(gn)) > 1e-9:
                    raise ConfigError(f"gamma*n = {gn} must be integral")

    def params(self) -> tuple:
        _, axis = KIND_PRESETS[self.kind]
        if axis == "t":
            return tuple(self.t_values)
        if axis == "s":
            return tuple(self.s_values)
        return ()

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        d["t_values"] = list(self.t_values)
        d["s_values"] = list(self.s_values)
        return d


def _load_schema() -> dict:
    with resources.files("lppsim").joinpath("config_schema.json").open() as f:
        return json.load(f)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if jsonschema is not None:
        try:
            jsonschema.validate(raw, _load_schema())
        except jsonschema.ValidationError as e:
            raise ConfigError(f"config validation failed: {e.message}") from e
    else:  # pragma: no cover
        known = set(ExperimentConfig.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    for key in ("n_values", "t_values", "s_values"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# aggregation state
# ---------------------------------------------------------------------------


class _CellAggregate:
    """Mergeable per-(n, parameter-cell) accumulation of chunk results."""

    def __init__(self, family: str):
        self.family = family
        self.hists: dict[str, dict[int, int]] = {}
        self.moments: dict[str, list] = {}  # name -> [count, total, total_sq]
        self.s_successes: dict[str, int] = {}
        self.trials = 0
        self.count_successes = 0
        self.count_sum = 0
        self.count_sq_sum = 0

    def _hist_update(self, name: str, values: np.ndarray):
        h = self.hists.setdefault(name, {})
        vals, freq = np.unique(values, return_counts=True)
        for v, f in zip(vals.tolist(), freq.tolist()):
            h[int(v)] = h.get(int(v), 0) + int(f)

    def _moment_update(self, name: str, values: np.ndarray):
        m = self.moments.setdefault(name, [0, 0.0, 0.0])
        m[0] += len(values)
        m[1] += float(values.sum())
        m[2] += float((values * values).sum())

    def absorb(self, stats: dict, s_kinds: list, n: int):
        size = None
        for name, arr in stats.items():
            if name.startswith("psi"):
                self._hist_update(name, arr)
                size = len(arr)
            elif name == "counts":
                self._hist_update("count_hist", arr)
                self.count_successes += int(np.count_nonzero(arr))
                self.count_sum += int(arr.sum())
                self.count_sq_sum += int((arr * arr).sum())
                size = len(arr)
            else:
                self._moment_update(name, arr)
                size = len(arr)
        for kind in s_kinds:
            ind = est.indicator(kind, n, stats)
            key = repr(kind.param)
            self.s_successes[key] = self.s_successes.get(key, 0) + int(np.count_nonzero(ind))
        self.trials += size

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "trials": self.trials,
            "hists": {k: {str(kk): vv for kk, vv in sorted(v.items())} for k, v in self.hists.items()},
            "moments": self.moments,
            "s_successes": self.s_successes,
            "count_successes": self.count_successes,
            "count_sum": self.count_sum,
            "count_sq_sum": self.count_sq_sum,
        }

    @classmethod
    def from_json(cls, d: dict) -> "_CellAggregate":
        out = cls(d["family"])
        out.trials = d["trials"]
        out.hists = {k: {int(kk): vv for kk, vv in v.items()} for k, v in d["hists"].items()}
        out.moments = {k: list(v) for k, v in d["moments"].items()}
        out.s_successes = dict(d["s_successes"])
        out.count_successes = d["count_successes"]
        out.count_sum = d["count_sum"]
        out.count_sq_sum = d["count_sq_sum"]
        return out

    def hist_successes(self, name: str, predicate) -> int:
        return sum(f for v, f in self.hists.get(name, {}).items() if predicate(v))


def hist_median(hist: dict[int, int]) -> float:
    """Exact lower median of an integer histogram."""
    total = sum(hist.values())
    if total == 0:
        raise ValueError("empty histogram")
    need = (total + 1) // 2
    acc = 0
    for v in sorted(hist):
        acc += hist[v]
        if acc >= need:
            return float(v)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# the runner
# ---------------------------------------------------------------------------


def _cells_per_replicate(kind: str, n: int, gamma: float | None, hw: int | None) -> float:
    tri = lambda m: (m + 1) * (m + 2) / 2.0
    if kind in ("midpoint-above", "midpoint-deviation", "exact-mid-hit", "midpoint-displacement"):
        return 2 * tri(n)
    if kind in ("endpoint-above", "endpoint-deviation", "exact-end-hit", "line-sup-upper", "line-sup-lower"):
        return tri(2 * n)
    if kind == "deviation-profile":
        return tri(2 * n) + 2 * tri(n)
    if kind == "passage-upper":
        return (n + 1.0) ** 2
    if kind == "gamma-count":
        gn = round(gamma * n)
        return (2 * hw + 1) * (tri(2 * gn) + tri(2 * (n - gn)))
    if kind in ("endpoint-count", "interval-inf-lower"):
        return (2 * hw + 1) * tri(2 * n)
    return 0.0


def resolve_workers(config_workers: int) -> int:
    envval = os.environ.get("LPPSIM_WORKERS")
    if envval:
        return max(int(envval), 1)
    if config_workers > 0:
        return config_workers
    return os.cpu_count() or 1


class ExperimentRecord:
    """Persisted, resumable experiment state."""

    def __init__(self, data: dict, path: Path):
        self.data = data
        self.path = Path(path)

    @property
    def complete(self) -> bool:
        return self.data.get("status") == "complete"

    @property
    def config(self) -> ExperimentConfig:
        return config_from_dict(self.data["config"])

    def estimates(self) -> list[est.EventEstimate]:
        out = []
        for e in self.data.get("estimates", []):
            ee = est.EventEstimate(
                kind_name=e["kind"], n=e["n"], param=e["param"], trials=e["trials"],
                successes=e["successes"], weight_sum=e["weight_sum"],
                confidence=e["confidence"], p_hat=e["p_hat"],
                ci_low=e["ci_low"], ci_high=e["ci_high"],
                convention=e.get("convention", ""),
                interval_size=e.get("interval_size", 0), delta=e.get("delta"),
            )
            out.append(ee)
        return out

    def aggregate(self, n: int, t: float | None = None) -> _CellAggregate:
        return _CellAggregate.from_json(self.data["aggregates"][_cell_id(n, t)])

    def save(self):
        _atomic_write_json(self.path, self.data)

    def csv_text(self) -> str:
        lines = [CSV_HEADER]
        seed = self.data["config"]["master_seed"]
        for e in self.data.get("estimates", []):
            lines.append(
                f"{e['kind']},{e['n']},{e['param']!r},{e['trials']},{e['successes']},"
                f"{e['weight_sum']!r},{e['p_hat']!r},{e['ci_low']!r},{e['ci_high']!r},"
                f"{e['confidence']!r},{seed}"
            )
        return "\n".join(lines) + "\n"


def _atomic_write_json(path: Path, data: dict):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(data, f, sort_keys=True, indent=1)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def _cell_id(n: int, t: float | None) -> str:
    return f"n={n}" if t is None else f"n={n}|t={t!r}"


def _plan_cells(config: ExperimentConfig) -> list[tuple]:
    """Work cells: counting kinds need one sweep per (n, t); threshold kinds
    share one sweep per n across every parameter."""
    family, _ = KIND_PRESETS[config.kind]
    if family in (est.FAMILY_GAMMA_COUNT, est.FAMILY_END_COUNT):
        return [(n, t) for n in config.n_values for t in config.params()]
    return [(n, None) for n in config.n_values]


def _threshold_kinds(config: ExperimentConfig, which: str | None = None) -> list[est.EventKind]:
    """EventKind objects whose indicators run on float statistics per chunk."""
    kinds = []
    if config.kind == "passage-upper":
        kinds = [est.passage_upper(s) for s in config.s_values]
    elif config.kind == "line-sup-upper":
        kinds = [est.line_sup_upper(s) for s in config.s_values]
    elif config.kind == "line-sup-lower":
        kinds = [est.line_sup_lower(s) for s in config.s_values]
    elif config.kind == "interval-inf-lower":
        kinds = [est.interval_inf_lower(s, config.delta) for s in config.s_values]
    return kinds


def record_path_for(config: ExperimentConfig) -> Path:
    return Path(config.output_path) / f"{config.experiment_id}.json"


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentRecord:
    """Run (or resume, or simply load) the experiment described by config.

    Identical config + seed produce byte-identical records and CSVs for any
    worker count; a completed record on disk is returned without
    recomputation.
    """
    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = record_path_for(config)
    if path.exists():
        rec = load_record(path)
        _check_record_compat(rec, config)
        if rec.complete:
            return rec
        data = rec.data
    else:
        data = {
            "format": RECORD_FORMAT,
            "config": config.to_json_dict(),
            "code_version": __version__,
            "generator": {"id": GENERATOR_ID, "version": GENERATOR_VERSION},
            "status": "running",
            "watermarks": {},
            "aggregates": {},
            "estimates": [],
            "perf": {"elapsed_s": 0.0, "cells": 0.0},
        }
    rec = ExperimentRecord(data, path)
    _execute(rec, config, progress)
    return rec


def resume(record_path) -> ExperimentRecord:
    """Continue an interrupted experiment from its checkpoint."""
    rec = load_record(record_path)
    config = rec.config
    if rec.complete:
        return rec
    _execute(rec, config, None)
    return rec


def load_record(path) -> ExperimentRecord:
    path = Path(path)
    with open(path) as f:
        data = json.load(f)
    if data.get("format") != RECORD_FORMAT:
        raise ConfigError(f"{path} is not a {RECORD_FORMAT} record")
    return ExperimentRecord(data, path)


def _check_record_compat(rec: ExperimentRecord, config: ExperimentConfig):
    stored = rec.data["config"]
    if stored != config.to_json_dict():
        raise ConfigError(
            f"record {rec.path} was produced by a different config; refusing to mix replicates"
        )
    if rec.data.get("code_version") != __version__ and not rec.complete:
        raise ConfigError(
            f"record {rec.path} was checkpointed by code version {rec.data.get('code_version')}, "
            f"running {__version__}; refusing to resume across versions"
        )
    gen = rec.data.get("generator", {})
    if gen.get("id") != GENERATOR_ID or gen.get("version") != GENERATOR_VERSION:
        raise ConfigError(f"record {rec.path} used generator {gen}, incompatible with {GENERATOR_ID}")


def _execute(rec: ExperimentRecord, config: ExperimentConfig, progress):
    family, _ = KIND_PRESETS[config.kind]
    workers = resolve_workers(config.workers)
    s_kinds = _threshold_kinds(config)
    t0 = time.monotonic()
    base_elapsed = float(rec.data["perf"].get("elapsed_s", 0.0))
    last_ckpt_time = t0
    last_ckpt_reps = 0
    done_reps = 0

    def checkpoint(cid, agg, watermark):
        rec.data["aggregates"][cid] = agg.to_json()
        rec.data["watermarks"][cid] = watermark
        rec.data["perf"]["elapsed_s"] = base_elapsed + (time.monotonic() - t0)
        _refresh_estimates(rec, config)
        rec.save()

    for n, t in _plan_cells(config):
        cid = _cell_id(n, t)
        if cid in rec.data["aggregates"]:
            agg = _CellAggregate.from_json(rec.data["aggregates"][cid])
        else:
            agg = _CellAggregate(family)
        watermark = int(rec.data["watermarks"].get(cid, 0))
        if watermark >= config.replicates:
            continue
        hw = None
        if family in (est.FAMILY_GAMMA_COUNT, est.FAMILY_END_COUNT, est.FAMILY_INTERVAL_INF):
            tt = t if t is not None else (config.t_values[0] if config.t_values else 0.0)
            hw = est.interval_half_width(n, tt, config.delta)
        cells_per_rep = _cells_per_replicate(config.kind, n, config.gamma, hw)

        chunk = config.chunk_size
        starts = list(range(watermark, config.replicates, chunk))

        def job(lo, n=n, t=t, hw=hw):
            hi = min(lo + chunk, config.replicates)
            return lo, est.evaluate_chunk(
                family, config.master_seed, lo, hi, n,
                gamma=config.gamma, t=(t if t is not None else 0.0), half_width=hw,
            )

        pending_results: dict[int, dict] = {}
        next_idx = 0

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures: set = set()
            submitted = 0
            while next_idx < len(starts):
                while submitted < len(starts) and len(futures) < workers * 2:
                    futures.add(pool.submit(job, starts[submitted]))
                    submitted += 1
                done, futures = wait(futures, return_when=FIRST_COMPLETED)
                for f in done:
                    lo, stats = f.result()
                    pending_results[lo] = stats
                # merge strictly in chunk order so the record is independent
                # of completion order and worker count
                while next_idx < len(starts) and starts[next_idx] in pending_results:
                    lo = starts[next_idx]
                    stats = pending_results.pop(lo)
                    hi = min(lo + chunk, config.replicates)
                    agg.absorb(stats, s_kinds, n)
                    watermark = hi
                    done_reps += hi - lo
                    rec.data["perf"]["cells"] += cells_per_rep * (hi - lo)
                    next_idx += 1
                now = time.monotonic()
                if (now - last_ckpt_time >= CHECKPOINT_SECONDS
                        or done_reps - last_ckpt_reps >= CHECKPOINT_REPLICATES):
                    checkpoint(cid, agg, watermark)
                    last_ckpt_time = now
                    last_ckpt_reps = done_reps
                    if progress:
                        progress(cid, watermark, config.replicates)
        checkpoint(cid, agg, watermark)
        if progress:
            progress(cid, watermark, config.replicates)

    rec.data["status"] = "complete"
    _refresh_estimates(rec, config)
    elapsed = rec.data["perf"]["elapsed_s"]
    rec.data["perf"]["cells_per_s"] = rec.data["perf"]["cells"] / elapsed if elapsed > 0 else 0.0
    rec.save()
    _atomic_write_text(rec.path.with_suffix(".csv"), rec.csv_text())
    return rec


def _refresh_estimates(rec: ExperimentRecord, config: ExperimentConfig):
    ests = []
    family, _ = KIND_PRESETS[config.kind]
    for n, t in _plan_cells(config):
        cid = _cell_id(n, t)
        if cid not in rec.data["aggregates"]:
            continue
        agg = _CellAggregate.from_json(rec.data["aggregates"][cid])
        if agg.trials == 0:
            continue
        ests.extend(_derive_estimates(config, family, n, t, agg))
    rec.data["estimates"] = ests


def _derive_estimates(config, family, n, t, agg: _CellAggregate) -> list[dict]:
    out = []
    conf = config.confidence

    def pack(kind_name, param, trials, successes, weight_sum, convention,
             interval_size=0, delta=None, extra=None):
        e = est.EventEstimate(
            kind_name=kind_name, n=n, param=param, trials=trials,
            successes=successes, weight_sum=weight_sum, confidence=conf,
            convention=convention, interval_size=interval_size, delta=delta,
        )
        if interval_size:
            e.count_sq_sum = agg.count_sq_sum
        e.finalize()
        d = {
            "kind": e.kind_name, "n": e.n, "param": e.param, "trials": e.trials,
            "successes": e.successes, "weight_sum": e.weight_sum, "p_hat": e.p_hat,
            "ci_low": e.ci_low, "ci_high": e.ci_high, "confidence": e.confidence,
            "convention": e.convention, "interval_size": e.interval_size, "delta": e.delta,
        }
        if extra:
            d.update(extra)
        return d

    if family in (est.FAMILY_MID, est.FAMILY_ENDLINE, est.FAMILY_PROFILE):
        hist_specs = []
        if family in (est.FAMILY_MID, est.FAMILY_PROFILE):
            hist_specs.append(("psi_mid", "MIDPOINT", float(n) ** (2.0 / 3.0)))
        if family in (est.FAMILY_ENDLINE, est.FAMILY_PROFILE):
            hist_specs.append(("psi_end", "ENDPOINT", (2.0 * n) ** (2.0 / 3.0)))
        for hist_name, side, scale in hist_specs:
            hist = agg.hists.get(hist_name, {})
            for param in config.params():
                thr = 2 * math.floor(param * scale)
                if config.kind in ("exact-mid-hit", "exact-end-hit"):
                    if (side == "MIDPOINT") != (config.kind == "exact-mid-hit"):
                        continue
                    succ = agg.hist_successes(hist_name, lambda v: v == thr)
                    out.append(pack(f"EXACT_{'MID' if side == 'MIDPOINT' else 'END'}_HIT", param,
                                    agg.trials, succ, float(succ), f"psi == {thr}"))
                elif config.kind in ("midpoint-deviation", "endpoint-deviation"):
                    real_thr = param * scale
                    succ = agg.hist_successes(hist_name, lambda v: abs(v) >= real_thr)
                    out.append(pack(f"{side}_DEVIATION", param, agg.trials, succ, float(succ),
                                    f"|psi| >= {param!r}*scale (intro)"))
                else:
                    if config.strict:
                        succ = agg.hist_successes(hist_name, lambda v: v > thr)
                    else:
                        succ = agg.hist_successes(hist_name, lambda v: v >= thr)
                    cmp = ">" if config.strict else ">="
                    out.append(pack(f"{side}_ABOVE", param, agg.trials, succ, float(succ),
                                    f"psi {cmp} {thr} (corollary)"))
        if config.kind == "midpoint-displacement":
            hist = agg.hists.get("psi_mid", {})
            abs_hist: dict[int, int] = {}
            for v, f in hist.items():
                abs_hist[abs(v)] = abs_hist.get(abs(v), 0) + f
            med = hist_median(abs_hist)
            mean = sum(v * f for v, f in abs_hist.items()) / agg.trials
            out.append(pack("MIDPOINT_DISPLACEMENT", 0.0, agg.trials, agg.trials,
                            float(sum(v * f for v, f in abs_hist.items())),
                            "|psi| histogram summary",
                            extra={"median": med, "mean": mean}))
    if family in (est.FAMILY_SQUARE, est.FAMILY_ENDLINE, est.FAMILY_PROFILE, est.FAMILY_INTERVAL_INF):
        for kind in _threshold_kinds(config):
            succ = agg.s_successes.get(repr(kind.param), 0)
            out.append(pack(kind.name, kind.param, agg.trials, succ, float(succ), kind.convention))
    if family in (est.FAMILY_GAMMA_COUNT, est.FAMILY_END_COUNT):
        hw = est.interval_half_width(n, t, config.delta)
        size = 2 * hw + 1
        eff_delta = config.delta if config.delta is not None else (hw + 0.5) / float(n) ** (2.0 / 3.0)
        kind_name = "GAMMA_SET" if family == est.FAMILY_GAMMA_COUNT else "ENDPOINT_SET"
        e = est.EventEstimate(
            kind_name=kind_name, n=n, param=t, trials=agg.trials,
            successes=agg.count_successes, weight_sum=float(agg.count_sum),
            confidence=conf, convention="interval count",
            interval_size=size, delta=eff_delta,
        )
        e.count_sq_sum = agg.count_sq_sum
        e.finalize()
        out.append({
            "kind": e.kind_name, "n": e.n, "param": e.param, "trials": e.trials,
            "successes": e.successes, "weight_sum": e.weight_sum, "p_hat": e.p_hat,
            "ci_low": e.ci_low, "ci_high": e.ci_high, "confidence": e.confidence,
            "convention": e.convention, "interval_size": e.interval_size, "delta": e.delta,
            "p_hat_paper": e.p_hat_paper,
            "count_hist": {str(k): v for k, v in sorted(agg.hists.get("count_hist", {}).items())},
            "gamma": config.gamma,
        })
    # moment summaries ride along for every float statistic
    for name, (cnt, tot, tot_sq) in agg.moments.items():
        if cnt:
            mean = tot / cnt
            var = max(tot_sq / cnt - mean * mean, 0.0)
            out.append({
                "kind": f"MOMENTS[{name}]", "n": n, "param": 0.0, "trials": cnt,
                "successes": cnt, "weight_sum": tot, "p_hat": mean,
                "ci_low": mean, "ci_high": mean, "confidence": conf,
                "convention": "mean in p_hat; std in extra", "std": math.sqrt(var),
            })
    return out


# ---------------------------------------------------------------------------
# fitting pipeline
# ---------------------------------------------------------------------------

TARGET_CONSTANTS = {
    ("MIDPOINT_ABOVE", "cubic"): ("8/3", 8.0 / 3.0),
    ("ENDPOINT_ABOVE", "cubic"): ("4/3", 4.0 / 3.0),
    ("LINE_SUP_LOWER", "cubic"): ("3", 3.0),
    ("PASSAGE_UPPER", "power"): ("3/2", 1.5),
    ("LINE_SUP_UPPER", "power"): ("3/2", 1.5),
    ("MIDPOINT_DISPLACEMENT", "power"): ("2/3", 2.0 / 3.0),
    ("MOMENTS[t_pp]", "power"): ("1/3", 1.0 / 3.0),
}


def fit_pipeline(record_paths, model: str, selection: dict | None = None,
                 through_origin: bool = False, out_dir=None):
    """Fit a cubic or power law across the estimates of one or more records.

    selection filters estimates by kind (and optionally n); points whose CI
    spans more than one decade, or with zero successes, are excluded and
    listed in the report.  Returns (FitResult, report dict).
    """
    from .fitting import fit_cubic, fit_power, lnp_weight

    selection = selection or {}
    model = model.lower()
    if model not in ("cubic", "power"):
        raise ConfigError(f"unknown fit model {model!r}")
    rows = []
    kinds_seen = set()
    conventions = set()
    for p in record_paths:
        rec = load_record(p)
        for e in rec.data.get("estimates", []):
            if e["kind"].startswith("MOMENTS"):
                continue
            if selection.get("kind") and e["kind"] != selection["kind"]:
                continue
            if selection.get("n") and e["n"] != selection["n"]:
                continue
            kinds_seen.add(e["kind"])
            conventions.add(e.get("convention", ""))
            rows.append(e)
    if len(kinds_seen) > 1:
        raise ConfigError(f"records mix event kinds {sorted(kinds_seen)}; select one with --kind")
    if len(conventions) > 1:
        raise ConfigError(f"records mix scaling conventions {sorted(conventions)}")
    used, excluded = [], []
    for e in rows:
        if e["successes"] == 0 or e["p_hat"] <= 0.0 or e["p_hat"] >= 1.0:
            excluded.append((e["param"], "empty or degenerate count"))
            continue
        if e["ci_low"] <= 0 or e["ci_high"] / e["ci_low"] > 10.0:
            excluded.append((e["param"], "confidence interval spans more than one decade"))
            continue
        used.append(e)
    if len(used) < (1 if through_origin else 2):
        raise ConfigError("not enough usable points after the CI-width filter")
    used.sort(key=lambda e: (e["n"], e["param"]))
    if model == "cubic":
        pts = [(e["param"], e["p_hat"],
                lnp_weight(e["p_hat"], e["ci_low"], e["ci_high"], e["confidence"])) for e in used]
        fit = fit_cubic(pts, through_origin=through_origin)
        model_vals = [math.exp(-(fit.coefficient * e["param"] ** 3 + fit.intercept)) for e in used]
    else:
        pts = [(e["param"], -math.log(e["p_hat"])) for e in used]
        fit = fit_power(pts)
        model_vals = [math.exp(-math.exp(fit.intercept) * e["param"] ** fit.coefficient) for e in used]
    kind = next(iter(kinds_seen))
    target = TARGET_CONSTANTS.get((kind, model))
    report = {
        "model": model,
        "kind": kind,
        "coefficient": fit.coefficient,
        "intercept": fit.intercept,
        "residual_rms": fit.residual_rms,
        "points_used": fit.points_used,
        "parameter_range": [used[0]["param"], used[-1]["param"]],
        "regime": "pre-asymptotic (desk-scale n, moderate t)",
        "target_constant": {"name": target[0], "value": target[1]} if target else None,
        "excluded_points": excluded,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = ["param,p_hat,ci_low,ci_high,model_value"]
        for e, mv in zip(used, model_vals):
            lines.append(f"{e['param']!r},{e['p_hat']!r},{e['ci_low']!r},{e['ci_high']!r},{mv!r}")
        _atomic_write_text(out_dir / f"fit_{kind}_{model}.csv", "\n".join(lines) + "\n")
        _atomic_write_text(out_dir / f"fit_{kind}_{model}.json",
                           json.dumps(report, indent=1, sort_keys=True) + "\n")
    return fit, report
