import pytest

_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")
    config.stash[_OUTCOMES] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        item.config.stash[_OUTCOMES][mark.args] = report.passed


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_OUTCOMES]
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for (number, title), passed in sorted(results.items()):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}")
