import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).resolve().parents[1] / "src" / "compressmetrics" / "data"


@pytest.fixture(scope="session")
def resnet18_path():
    return DATA / "resnet18.json"


@pytest.fixture(scope="session")
def resnet18(resnet18_path):
    from compressmetrics.model_graph import load_model_descriptor

    return load_model_descriptor(resnet18_path)


_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number = int(name.split("_")[2])
        _criteria[number] = ("PASS" if report.outcome == "passed" else "FAIL", name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        outcome, name = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {outcome}  {name}")
