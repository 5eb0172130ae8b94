"""Pick adaptive thresholds for a host history and classify a forecast."""

from dataclasses import replace

import numpy as np

from mrmoslo import UtilizationSample as S
from mrmoslo.detection import DetectorConfig, classify, detect
from mrmoslo.moslo import MosloConfig, run_moslo

history = [S(c, 0.3, 0.2) for c in (0.0, 0.2, 0.5, 0.9, 1.0)]

# with no swarm motion the rule reduces to ranking: largest below 1, smallest above 0
print(run_moslo(history, MosloConfig(max_iterations=0)).thresholds)

# with motion the swarm adds positions it visited to the candidate pool
result = run_moslo(history, MosloConfig(rng_seed=1))
print(result.thresholds, f"from {len(result.candidates)} candidates")
print("gbest fitness per iteration:", [round(f, 4) for f in result.swarm.gbest_trace])

for predicted in (0.05, 0.5, 0.95):
    print(predicted, classify(predicted, result.thresholds).value)

# the whole detector on a noisy rising history
# (a perfectly linear one would make the design matrix singular)
rng = np.random.default_rng(2)
rising = [S(*np.clip([0.1 + 0.07 * t, 0.2 + 0.02 * t, 0.1], 0, 1) + rng.uniform(0, 0.05, 3)) for t in range(12)]
verdict = detect(rising, DetectorConfig())
print(verdict.state.value, round(verdict.predicted, 4), verdict.thresholds, verdict.flags)
print(detect(rising, replace(DetectorConfig(), kind="lr")).state.value, "under LR")
