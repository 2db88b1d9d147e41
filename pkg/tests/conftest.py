import pytest

_RESULTS = pytest.StashKey[dict]()
ACCEPTANCE_IDS = range(1, 10)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Record one verdict line per acceptance criterion."""
    return request.config.stash.setdefault(_RESULTS, {})


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in ACCEPTANCE_IDS:
        ok, detail = results.get(k, (False, "not run or did not complete"))
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
