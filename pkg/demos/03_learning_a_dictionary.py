"""Learning a small dictionary with the LRFMP and reusing it in the RFMP.

The learner starts from harmonics plus one shell of kernels and, in every
iteration, also optimizes a kernel centre freely inside the ball. The
elements it picks, in order, form the learnt dictionary. Running the RFMP
on that dictionary in growing mode reproduces the learner's expansion.

Run: python3 demos/03_learning_a_dictionary.py [--full]
The default is a reduced setting that runs in under a minute; --full uses the
defaults of ``lrfmp experiment`` (several minutes).
"""
import sys
from collections import Counter
from dataclasses import replace

import numpy as np

from lrfmp.experiment import expansion_mismatch, random_ground_truth, run_experiment
from lrfmp.io import ExperimentConfig
from lrfmp.learner import LearnConfig

cfg = ExperimentConfig()
if "--full" not in sys.argv:
    cfg = replace(cfg, data_gamma=20, eval_gamma=31, manual_max_degree=10, manual_gamma=15,
                  start_max_degree=14, start_gamma=10,
                  pursuit=replace(cfg.pursuit, lambda0=1e-3, max_iter=150),
                  learn=LearnConfig(force_sh_first=20))

model = random_ground_truth(cfg.truth_seed, 10)
res = run_experiment(cfg, model, manual_lambdas=[1e-2, 1e-3, 1e-4], manual_modes=("nonstationary",))

learnt = res.learnt
print(f"learner stopped after {learnt.state.iter} iterations ({learnt.reason})")
print(f"learnt dictionary: {len(learnt.dictionary)} elements "
      f"vs {res.manual_size} in the manual one")

sources = Counter(rec.source for rec in learnt.diagnostics)
print("where the picks came from:", dict(sources))
radii = [np.linalg.norm(d.x) for d in learnt.dictionary if d.kind == "APK"]
if radii:
    print(f"learnt kernel radii: min {min(radii):.3f}, max {max(radii):.3f}")

print(f"replay reproduces the learner to {expansion_mismatch(learnt.expansion, res.replay.expansion):.1e}")
print("relative surface errors:")
for name, err in res.errors.items():
    print(f"  {name:8s} {err[0]:.4f}")
print(f"learnt / manual error ratio {res.ratio:.3f}")
print("timings (s):", {k: round(v, 1) for k, v in res.timings.items()})
