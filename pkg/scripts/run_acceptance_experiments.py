#!/usr/bin/env python3
"""Precompute (or resume) the Monte Carlo records the acceptance suite uses.

Usage:
    python scripts/run_acceptance_experiments.py [--results DIR] [--only ID ...]

Safe to interrupt: every experiment checkpoints and resumes. Re-running
skips completed records.
"""

import argparse
import sys
import time

from lppsim.protocols import RUN_ORDER, acceptance_configs, results_dir
from lppsim.harness import run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--results", default=None, help="results directory (default: $LPPSIM_RESULTS or ./results)")
    ap.add_argument("--only", nargs="*", default=None, help="run only these experiment ids")
    ap.add_argument("--workers", type=int, default=0, help="worker threads (0 = auto)")
    args = ap.parse_args(argv)

    out = args.results or str(results_dir())
    configs = acceptance_configs(out, workers=args.workers)
    todo = args.only if args.only else RUN_ORDER
    unknown = set(todo) - set(configs)
    if unknown:
        ap.error(f"unknown experiment ids: {sorted(unknown)}")

    for exp_id in todo:
        cfg = configs[exp_id]
        t0 = time.time()
        print(f"[{time.strftime('%H:%M:%S')}] {exp_id}: replicates={cfg.replicates} "
              f"n={list(cfg.n_values)}", flush=True)

        def progress(cid, done, total):
            pct = 100.0 * done / total
            print(f"    {exp_id} {cid}: {done}/{total} ({pct:.1f}%) "
                  f"elapsed {time.time() - t0:.0f}s", flush=True)

        rec = run_experiment(cfg, progress=progress)
        print(f"[{time.strftime('%H:%M:%S')}] {exp_id}: done in {time.time() - t0:.0f}s "
              f"({rec.data['perf'].get('cells_per_s', 0):.2e} cells/s)", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
