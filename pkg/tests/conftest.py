import pytest

_LOG_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_LOG_KEY] = {}


@pytest.fixture
def acceptance_log(request):
    """Dict shared by the acceptance tests: criterion number -> (passed, detail)."""
    return request.config.stash[_LOG_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_LOG_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(log):
        ok, detail = log[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
