import pytest

_LINES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number checked by the test")


def _line(number, ok, detail):
    return f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.fixture
def acceptance_report(request):
    """Record one pass/fail line for the test's acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_LINES, {})
    number = request.node.get_closest_marker("criterion").args[0]

    def report(ok, detail):
        lines[number] = _line(number, ok, detail)
        print(lines[number])
        assert ok, detail

    return report


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" or not rep.failed:
        return
    lines = item.config.stash.setdefault(_LINES, {})
    number = marker.args[0]
    if number not in lines:
        err = call.excinfo.exconly().splitlines()[0] if call.excinfo else "failed"
        lines[number] = _line(number, False, err)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
