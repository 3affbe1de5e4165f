"""Accuracy and time of the block-sparse posterior against the dense solve.

Uses the searcher readings of the desk scenario plus RRT-fitted UAV paths.
"""

import dataclasses
import time

from sarplan.gp import MortonConfig
from sarplan.risk import RiskObjective
from sarplan.scenario import build_inputs, desk_config, fit_trajectories, plan_polylines, recommended_sparse

cfg = desk_config(0)
shared = build_inputs(cfg)
traj = fit_trajectories(cfg, plan_polylines(cfg, shared.terrain))

t0 = time.perf_counter()
dense = RiskObjective(shared.inputs).risk(traj)
print(f"dense   risk {dense:.6f}  {time.perf_counter() - t0:.3f} s")
for cutoff in (15.0, 30.0, 60.0, recommended_sparse(cfg).cutoff):
    inputs = dataclasses.replace(shared.inputs, sparse=MortonConfig(cutoff=cutoff))
    t0 = time.perf_counter()
    r = RiskObjective(inputs).risk(traj)
    print(f"cutoff {cutoff:5.0f} m  risk {r:.6f}  rel diff {abs(r - dense) / dense:.1e}  "
          f"{time.perf_counter() - t0:.3f} s")
