"""Fit the utilization model on one VM's history and forecast the next interval."""

import numpy as np

from mrmoslo import UtilizationSample
from mrmoslo.regression import ResourceWeights, fit_ols, load_score, one_step_rows, predict_utilization
from mrmoslo.workload import generate_random_workload

trace = generate_random_workload(seed=3, n_vms=4, n_intervals=24)
history = trace.series["0"][:12]

# the load score blows up as any resource approaches saturation
for s in history[:3]:
    print(f"cpu={s.cpu:.2f} ram={s.ram:.2f} bw={s.bw:.2f}  score={load_score(s, ResourceWeights()):.3f}")

# pair each sample with the next one's target and fit
rows = one_step_rows(history, ResourceWeights())
model = fit_ols(rows)
print("coefficients b0..b3:", np.round(model.coefficients, 4))

forecast = predict_utilization(model, history[-1])
print(f"forecast for interval 12: {forecast:.4f}")

# a noiseless plane comes back exactly
rng = np.random.default_rng(0)
xs = rng.uniform(0, 1, size=(20, 3))
plane = [(UtilizationSample(*map(float, x)), 0.1 + 0.5 * x[0] + 0.3 * x[1] + 0.2 * x[2]) for x in xs]
print("recovered plane:", np.round(fit_ols(plane).coefficients, 12))
