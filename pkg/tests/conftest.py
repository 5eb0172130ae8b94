import pytest

from mrmoslo.domain import ClusterState, HostSpec, HostState, UtilizationSample, VmSpec


@pytest.fixture
def small_host():
    return HostSpec("h", 1000.0, 1000.0, 100.0, 100.0, 200.0)


@pytest.fixture
def make_cluster(small_host):
    """Cluster builder: ``make_cluster({0: ["a", "b"], 1: []}, cpu={"a": 0.5})``."""

    def build(layout, cpu=None, specs=None, vm_mips=1000.0, vm_ram=100.0, vm_bw=10.0):
        cpu = cpu or {}
        n = max(layout) + 1 if layout else 0
        hosts = [HostState(specs[i] if specs else small_host) for i in range(n)]
        cluster = ClusterState(hosts=hosts)
        for index, vms in layout.items():
            host = hosts[index]
            host.active = bool(vms) or host.active
            for vm in vms:
                host.resident_vms.append(vm)
                cluster.vm_assignment[vm] = index
                cluster.vms[vm] = VmSpec(vm, vm_mips, vm_ram, vm_bw)
                u = cpu.get(vm, 0.5)
                cluster.vm_samples[vm] = UtilizationSample(u, 0.5, 0.5)
                cluster.vm_cpu_history[vm] = [u]
        return cluster

    return build


# acceptance reporting: one line per criterion at the end of the run

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            entry = _criteria.setdefault(number, {"title": title, "outcomes": []})
            entry.setdefault("items", set()).add(item.nodeid)


def pytest_runtest_logreport(report):
    for entry in _criteria.values():
        if report.nodeid not in entry.get("items", ()):
            continue
        if report.when == "call" or report.outcome != "passed":
            if hasattr(report, "wasxfail"):
                outcome = "xfail" if report.skipped else "passed"
            else:
                outcome = report.outcome
            entry["outcomes"].append((report.nodeid.split("::")[-1], outcome))


def pytest_terminal_summary(terminalreporter):
    if not any(e["outcomes"] for e in _criteria.values()):
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if not entry["outcomes"]:
            continue
        failed = [name for name, outcome in entry["outcomes"] if outcome != "passed"]
        status = "PASS" if not failed else "FAIL"
        detail = f"  (not met: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {entry['title']}{detail}")
