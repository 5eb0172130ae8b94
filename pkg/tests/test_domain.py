import pytest

from mrmoslo.domain import HostSpec, Load, UtilizationSample, VmSpec, validate_cluster


def test_sample_range_enforced():
    with pytest.raises(ValueError):
        UtilizationSample(1.2, 0.0, 0.0)
    assert UtilizationSample.clamped(1.3, -0.1, 0.4) == UtilizationSample(1.0, 0.0, 0.4)


def test_spec_validation():
    with pytest.raises(ValueError):
        HostSpec("bad", 0, 1, 1, 1, 2)
    with pytest.raises(ValueError):
        HostSpec("bad", 1, 1, 1, 3, 2)
    with pytest.raises(ValueError):
        VmSpec("v", 100, 0, 1)


def test_valid_cluster_has_empty_report(make_cluster):
    cluster = make_cluster({0: ["a", "b"], 1: ["c"]})
    assert validate_cluster(cluster) == []


def test_duplicate_assignment_reported(make_cluster):
    cluster = make_cluster({0: ["a"], 1: ["b"]})
    cluster.hosts[1].resident_vms.append("a")
    report = validate_cluster(cluster)
    assert len(report) == 1
    assert report[0].startswith("duplicate assignment")


def test_inactive_host_occupied_reported(make_cluster):
    cluster = make_cluster({0: ["a"], 1: ["b"]})
    cluster.hosts[1].active = False
    report = validate_cluster(cluster)
    assert len(report) == 1
    assert report[0].startswith("inactive host occupied")


def test_full_time_bound_reported(make_cluster):
    cluster = make_cluster({0: ["a"]})
    cluster.hosts[0].total_full_utilization_seconds = 10.0
    assert any("full-utilization" in r for r in validate_cluster(cluster))


def test_host_utilization_sums_vm_demand(make_cluster):
    cluster = make_cluster({0: ["a", "b"]}, cpu={"a": 0.3, "b": 0.4})
    u = cluster.host_utilization(0)
    assert u.cpu == pytest.approx(0.7)
    assert u.ram == pytest.approx(2 * 0.5 * 100 / 1000)
    assert cluster.host_utilization(0, exclude={"a"}).cpu == pytest.approx(0.4)


def test_host_utilization_clamps(make_cluster):
    cluster = make_cluster({0: ["a", "b"]}, cpu={"a": 0.8, "b": 0.8})
    assert cluster.host_utilization(0).cpu == 1.0
    assert cluster.host_demand_mips(0) == pytest.approx(1600.0)


def test_move_preserves_multiset(make_cluster):
    cluster = make_cluster({0: ["a", "b"], 1: ["c"]})
    before = cluster.vm_multiset()
    cluster.move_vm("a", 1)
    cluster.move_vm("c", 0)
    assert cluster.vm_multiset() == before
    assert validate_cluster(cluster) == []


def test_load_fits(small_host):
    assert Load(1000, 1000, 100).fits(small_host)
    assert not Load(1000.1, 0, 0).fits(small_host)


def test_sample_fields_are_plain_floats():
    import numpy as np

    s = UtilizationSample(np.float64(0.25), np.float32(0.5), 1)
    assert all(type(v) is float for v in s.as_tuple())
