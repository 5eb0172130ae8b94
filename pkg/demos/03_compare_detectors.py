"""Desk-scale comparison of the five detectors over a handful of seeds."""

import statistics

from mrmoslo.cli import ExperimentConfig, render_report, run_experiment

config = ExperimentConfig(
    hosts=25, vms=30, tasks=500,
    detectors=("mr-moslo", "thr", "iqr", "mad", "lr"),
    seeds=tuple(range(5)),
)
rows = run_experiment(config)

print(render_report(rows[:2]), end="")
print("...")
print()
print(f"{'detector':10s} {'energy kWh':>10s} {'SLATAH':>8s} {'PDM':>9s} {'SLAV':>9s} {'ESV':>9s} {'migr':>5s}")
for kind in config.detectors:
    mine = [r for r in rows if r["detector"] == kind]
    med = {k: statistics.median(r[k] for r in mine) for k in ("energy_kwh", "slatah", "pdm", "slav", "esv", "migrations")}
    print(
        f"{kind:10s} {med['energy_kwh']:10.3f} {med['slatah']:8.4f} {med['pdm']:9.2e}"
        f" {med['slav']:9.2e} {med['esv']:9.2e} {med['migrations']:5.0f}"
    )
