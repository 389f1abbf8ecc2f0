import numpy as np
import pytest

from ciebench.inference import InferenceConfig, dataset_from_trajectory
from ciebench.inference.structure import grow
from ciebench.world import WorldConfig, simulate

_criteria: dict[int, dict] = {}


@pytest.fixture(scope="session")
def default_trajectory():
    return simulate(WorldConfig())


@pytest.fixture(scope="session")
def default_dataset(default_trajectory):
    return dataset_from_trajectory(default_trajectory)


@pytest.fixture(scope="session")
def grown_model(default_dataset):
    return grow(default_dataset, InferenceConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "seen": False, "duration": 0.0})
    if report.when == "call" or report.failed:
        entry["seen"] = True
        entry["duration"] += report.duration
        if report.failed or report.skipped:
            entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        status = "PASS" if e["passed"] and e["seen"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {e['title']}  ({e['duration']:.2f}s)")
