import time
from contextlib import contextmanager

import pytest

from emosense.core import ProtocolTimeline
from emosense.pipeline import derive_series
from emosense.synth import ModulationSpec, generate_session

_CRITERIA = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def traces():
    return generate_session("S01", ProtocolTimeline(), spec=ModulationSpec(arousal_gsr_gain=6.0, seed=1))


@pytest.fixture(scope="session")
def derived(traces):
    return derive_series(traces)


@pytest.fixture
def criterion(request):
    """Context manager that records one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    @contextmanager
    def run(number, title):
        info = {"detail": ""}
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield info
            status = "PASS"
        finally:
            detail = f"  [{info['detail']}]" if info["detail"] else ""
            line = f"criterion {number}: {status}  {title}{detail} ({time.perf_counter() - t0:.1f} s)"
            print(line)
            lines.append(line)

    return run


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
