import numpy as np
import pytest

from besvm import _backend

ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion id and name")


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Attach a measured value to the current acceptance criterion's summary line."""
    notes = []
    yield notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        detail = ""
        fx = getattr(item, "funcargs", {})
        if "record" in fx:
            cell = fx["record"].__self__
            detail = "; ".join(str(v) for v in cell)
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        ACCEPTANCE.append((mark.args[0], mark.args[1], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, name, status, detail in sorted(ACCEPTANCE):
        line = f"[{status}] criterion {n:>2}: {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
