import numpy as np
import pytest

from occupancy import LetterDistribution, build_model

M1_MATRIX = [[0.9, 0.1], [0.2, 0.8]]

_criteria = {}


@pytest.fixture
def m1_uniform():
    return build_model(M1_MATRIX, [LetterDistribution.uniform(2), LetterDistribution.uniform(3)])


@pytest.fixture
def m1_zipf():
    Z = LetterDistribution.zipf(0.5)
    return build_model(M1_MATRIX, [Z, Z])


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    grouped = {}
    for name, outcome in _criteria.items():
        number = int(name.split("_")[2])
        grouped.setdefault(number, []).append((name.split("[")[0], outcome))
    terminalreporter.section("acceptance criteria")
    for number in sorted(grouped):
        runs = grouped[number]
        verdict = "PASS" if all(o == "passed" for _, o in runs) else "FAIL"
        names = ", ".join(sorted({n for n, _ in runs}))
        count = f"{len(runs)} test" + ("" if len(runs) == 1 else "s")
        terminalreporter.write_line(f"{verdict}  criterion {number}: {names} ({count})")


def rng(seed=0):
    return np.random.default_rng(seed)
