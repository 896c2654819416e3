"""Desk-scale benchmark table: track loss and relative execution time.

Runs every (filter, case) cell in both modes at a reduced run count and
prints a table shaped like the full benchmark: track loss percentage and
execution time relative to the EKF Case I known-side baseline. Use the CLI
(``towedtma montecarlo --runs 50000 ...``) for full-scale numbers.

Run:  python demos/benchmark_table.py [n_runs]
"""

import sys

import towedtma as tt
from towedtma import evalkit, simkit

n_runs = int(sys.argv[1]) if len(sys.argv) > 1 else 300

rows = []
walls = {}
for case in ("cv", "ct"):
    for kind in tt.FILTER_KINDS:
        cfg = tt.ScenarioConfig(filter_kind=kind, model_kind=case, n_runs=n_runs)
        for mode in (simkit.KNOWN_SIDE, simkit.RESOLVED):
            sums = simkit.run_monte_carlo(cfg, mode=mode, workers=2)
            loss = evalkit.track_loss_pct(sums, cfg.track_bound_km)
            wall = evalkit.mean_wall_time(sums)
            walls[kind, case, mode] = wall
            rows.append((kind, case, mode, loss, wall))

base = walls["ekf", "cv", simkit.KNOWN_SIDE]
print(f"\n{n_runs} runs per cell (relative time baseline: ekf/cv/known-side)")
print(f"{'filter':>6} {'case':>4} {'mode':>10} {'loss %':>7} {'rel time':>9}")
for kind, case, mode, loss, wall in rows:
    print(f"{kind:>6} {case:>4} {mode:>10} {loss:7.2f} {wall / base:9.2f}")
