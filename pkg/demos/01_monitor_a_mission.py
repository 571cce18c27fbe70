"""Monitor one taxi mission and watch Pr(AssuredTaxi) evolve.

Trains the network on two daytime conditions, then drives an unseen
morning mission that starts 1.5 m off the centerline. Every 10th frame
prints the filtered assurance measure at both offsets, the worst forecast
over the next six steps, and the contingency action.

    python3 demos/01_monitor_a_mission.py
"""
import numpy as np

from taxiassure.assurance import AssuranceSession
from taxiassure.dbn import EvidenceFrame
from taxiassure.sim import PRESETS, TRAIN_ENVS, Mission, SimConfig, VehicleState, generate_missions
from taxiassure.training import train_model

train = generate_missions([PRESETS[e] for e in TRAIN_ENVS], 26, 200, seed=1)
model, summary = train_model(train)
print("\n".join(summary.lines()), end="\n\n")

mission = Mission(SimConfig(PRESETS["clear-1000"], initial=VehicleState(1.5, 0.0), seed=4))
session = AssuranceSession(model)

print("   t  cte_true  cte_e   Pr(<2m)  Pr(<1.43m)  worst ahead  action")
for t in range(200):
    obs = mission.observe()
    r = session.step(EvidenceFrame(obs.features, obs.cte_e, obs.he_e, t))
    if t % 10 == 0 or r.action != "continue":
        worst = min(m[2.0] for m in r.forecast_measures)
        print(f"{t:4d}  {mission.state.cte:8.2f}  {obs.cte_e:5.2f}   {r.measures[2.0]:.3f}    "
              f"{r.measures[1.43]:.3f}       {worst:.3f}      {r.action}{'  (OOD)' if r.ood else ''}")
    mission.advance(obs)
