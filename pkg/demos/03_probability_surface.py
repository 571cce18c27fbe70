"""Print the probability surface of a mission as a text heat map.

Each row is one frame; columns are the nine CTE states from the far left
(-10..-2 m) to the far right (2..10 m). Darker glyphs mean more belief
mass. ``*`` marks the true CTE state and ``o`` the perception estimate
when they differ. The same grid is written to ``surface.json`` for
plotting elsewhere.

    python3 demos/03_probability_surface.py [out.json]
"""
import sys

import numpy as np

from taxiassure.assurance import monitor_trajectory
from taxiassure.evaluation import surface_export
from taxiassure.sim import PRESETS, TRAIN_ENVS, SimConfig, VehicleState, generate_missions, run_mission
from taxiassure.training import train_model

GLYPHS = " .:-=+#%@"

model, _ = train_model(generate_missions([PRESETS[e] for e in TRAIN_ENVS], 26, 200, seed=1))
tr = run_mission(SimConfig(PRESETS["clear-1145"], duration=60, initial=VehicleState(2.5, -3.0), seed=8))
reports = monitor_trajectory(model, tr)
p = model.cte_partition

print("  t  " + "".join(f"{c:>6.1f}" for c in p.centers) + "   Pr(<2m)")
for r, ct, ce in zip(reports, tr.cte_true, tr.cte_e):
    cells = [GLYPHS[min(int(v * len(GLYPHS)), len(GLYPHS) - 1)] * 3 for v in r.belief]
    a, e = p.locate(p.clamp(ct)), p.locate(p.clamp(ce))
    cells[a] = cells[a][0] + "*" + cells[a][2]
    if e != a:
        cells[e] = cells[e][0] + "o" + cells[e][2]
    print(f"{r.t:3d}  " + "".join(f"  [{c}]"[-6:] for c in cells) + f"   {r.measures[2.0]:.2f} {r.action}")

out = sys.argv[1] if len(sys.argv) > 1 else "surface.json"
surface_export(reports, p, out, cte_true=tr.cte_true, cte_e=tr.cte_e)
print(f"\nsurface written to {out}")
