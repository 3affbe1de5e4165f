"""Four-way risk comparison on one desk-scale scenario.

Run with ``python3 demos/desk_comparison.py [seed]``.  Prints the table and
how the optimizer spent its iterations.
"""

import sys

from sarplan.scenario import compare_baselines, desk_config

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = desk_config(seed)
table = compare_baselines(cfg)
print(table.format())

res = table.result.optimize_result
first, last = res.log[0], res.log[-1]
print(f"\noptimizer: {res.iterations} iterations, F {first['F']:.4f} -> {res.best_objective:.4f}")
print(f"length {table.result.report.total_length:.0f} m (cap {cfg.objective.C_time:.0f}), "
      f"smoothness {table.result.report.smoothness:.0f} (cap {cfg.objective.C_smooth:.0f})")
