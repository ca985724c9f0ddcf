#!/usr/bin/env python3
"""Sweep random connectivity scenarios and report convergence behavior.

Example:
    python scripts/convergence_sweep.py --runs 200 --seed-base 0
"""

from __future__ import annotations

import argparse
import statistics
import time

from fieldsync.sim import check_trace, load_scenario, random_scenario_doc, run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--seed-base", type=int, default=0)
    parser.add_argument("--max-devices", type=int, default=5)
    parser.add_argument("--max-ticks", type=int, default=500)
    parser.add_argument("--max-records", type=int, default=200)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args()

    converged = 0
    violations = 0
    tick_counts, record_counts, event_counts = [], [], []
    started = time.perf_counter()
    for i in range(args.runs):
        seed = args.seed_base + i
        scenario = load_scenario(random_scenario_doc(
            seed, max_devices=args.max_devices, max_ticks=args.max_ticks,
            max_records=args.max_records))
        result = run(scenario)
        report = check_trace(result.trace)
        converged += result.convergence.converged
        violations += len(report.violations)
        tick_counts.append(scenario.ticks)
        record_counts.append(result.convergence.record_counts["cloud"])
        event_counts.append(len(result.trace))
        if args.verbose or not result.convergence.converged:
            print(f"seed {seed}: converged={result.convergence.converged} "
                  f"ticks={scenario.ticks} records={record_counts[-1]} "
                  f"events={event_counts[-1]}")
    elapsed = time.perf_counter() - started

    print(f"\nruns           : {args.runs}")
    print(f"converged      : {converged}/{args.runs}")
    print(f"trace failures : {violations}")
    print(f"ticks          : median {statistics.median(tick_counts):.0f}, "
          f"max {max(tick_counts)}")
    print(f"records/run    : median {statistics.median(record_counts):.0f}, "
          f"max {max(record_counts)}")
    print(f"trace events   : median {statistics.median(event_counts):.0f}")
    print(f"elapsed        : {elapsed:.2f}s ({elapsed / args.runs * 1000:.1f} ms/run)")
    return 0 if converged == args.runs and violations == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
