"""Does the monitor catch what the perception loop misses?

The perception loop (the LES) judges itself by its own CTE estimate. Under
a lighting shift its estimate picks up a meter of bias, so it keeps
claiming to be on the centerline while the aircraft drifts. The network
reads the raw perception features instead and keeps a calibrated belief.
Specificity, the rate of correctly flagging a real violation, is where
the difference shows.

    python3 demos/02_covariate_shift.py
"""
import numpy as np

from taxiassure.evaluation import evaluate
from taxiassure.sim import (GROSS_SHIFT_ENV, IN_DISTRIBUTION_TEST_ENV, PRESETS, SHIFTED_TEST_ENVS, TRAIN_ENVS,
                            generate_missions)
from taxiassure.training import train_model

model, _ = train_model(generate_missions([PRESETS[e] for e in TRAIN_ENVS], 26, 200, seed=1))

tests = {e: generate_missions([PRESETS[e]], 30, 200, seed=2) for e in (IN_DISTRIBUTION_TEST_ENV, *SHIFTED_TEST_ENVS)}
print(f"{'environment':<15}{'subject':<9}{'sensitivity':>12}{'specificity':>13}{'frames':>8}")
for row in evaluate(model, tests):
    spec = "n/a" if row.specificity is None else f"{row.specificity:.3f}"
    print(f"{row.env:<15}{row.subject:<9}{row.sensitivity:>12.3f}{spec:>13}{row.n_frames:>8}")

print("\nOOD flag rate (fraction of frames where D is raised):")
for env in (IN_DISTRIBUTION_TEST_ENV, *SHIFTED_TEST_ENVS, GROSS_SHIFT_ENV):
    feats = np.vstack([t.features for t in generate_missions([PRESETS[env]], 5, 200, seed=3)])
    print(f"  {env:<15}{np.mean(model.ood.distances(feats) > model.ood.threshold):.3f}")
