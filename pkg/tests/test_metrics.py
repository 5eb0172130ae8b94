import pytest
from hypothesis import given, settings, strategies as st

from mrmoslo.detection import DetectorConfig
from mrmoslo.engine import EngineConfig, IntervalEvent, default_hosts, run_simulation
from mrmoslo.metrics import (
    UndefinedMetricError,
    esv,
    host_times,
    pdm,
    sla_violation_pct,
    slatah,
    slav,
    summarize,
    total_energy,
    vm_degradation,
)
from mrmoslo.workload import generate_random_workload


def event(power=None, vm_intervals=0, breached=0, dt=300.0):
    return IntervalEvent(
        index=0, clock=0.0, interval_seconds=dt, verdicts={}, migrations=[], activated=[],
        deactivated=[], failed_evacuations=[], power=power or {}, full_utilization=[],
        vm_requested={}, vm_intervals=vm_intervals, breached_vm_intervals=breached,
    )


def test_slatah_examples():
    assert slatah([(30.0, 300.0)]) == pytest.approx(0.1)
    assert slatah([(30.0, 300.0), (90.0, 300.0)]) == pytest.approx(0.2)
    assert slatah([(0.0, 300.0)]) == 0.0
    assert slatah([(30.0, 300.0), (0.0, 0.0)]) == pytest.approx(0.1)
    with pytest.raises(UndefinedMetricError):
        slatah([(0.0, 0.0)])


def test_pdm_examples():
    assert pdm([(10.0, 1000.0)]) == pytest.approx(0.01)
    assert pdm([(0.0, 1000.0), (0.0, 50.0)]) == 0.0
    assert pdm([(20.0, 1000.0), (0.0, 1000.0)]) == pytest.approx(0.01)
    with pytest.raises(UndefinedMetricError):
        pdm([])


@pytest.mark.parametrize("a, b, expected", [(0.1, 0.02, 0.002), (0.0, 7.0, 0.0), (0.2, 0.5, 0.1)])
def test_slav(a, b, expected):
    assert slav(a, b) == pytest.approx(expected, abs=1e-18)


@pytest.mark.parametrize("a, b, expected", [(10.0, 0.002, 0.02), (3.3, 0.0, 0.0), (15.4, 0.001, 0.0154)])
def test_esv(a, b, expected):
    assert esv(a, b) == pytest.approx(expected, abs=1e-18)


def test_sla_violation_pct():
    assert sla_violation_pct([event(vm_intervals=4)]) == 0.0
    assert sla_violation_pct([event(vm_intervals=4, breached=4)]) == 100.0
    assert sla_violation_pct([event(vm_intervals=3), event(vm_intervals=1, breached=1)]) == 25.0


def test_total_energy():
    assert total_energy([event({0: 100.0}, dt=3600.0)]) == pytest.approx(0.1)
    assert total_energy([]) == 0.0
    assert total_energy([event({0: 100.0, 1: 100.0}, dt=1800.0)]) == pytest.approx(0.1)
    assert total_energy([event({0: 100.0}, dt=1.0)], interval_seconds=3600.0) == pytest.approx(0.1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["mr-moslo", "thr", "iqr", "mad", "lr"]))
def test_identities_and_recompute(seed, kind):
    trace = generate_random_workload(seed, 10, 12)
    cfg = EngineConfig(host_specs=default_hosts(6), detector=DetectorConfig(kind=kind), seed=seed)
    r = run_simulation(cfg, trace)
    assert r.slav == pytest.approx(r.slatah * r.pdm, rel=1e-12, abs=0)
    assert r.esv == pytest.approx(r.energy_kwh * r.slav, rel=1e-12, abs=0)
    assert summarize(r.events).row() == r.row()
    assert 0 <= r.slatah <= 1 and 0 <= r.pdm <= 1 and 0 <= r.sla_violation_pct <= 100
    for toi, tai in host_times(r.events).values():
        assert toi <= tai
    for cd, cr in vm_degradation(r.events).values():
        assert 0 <= cd <= cr
