import pytest

_verdicts = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")
    config.stash[_verdicts] = []


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return report
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    verdict = "PASS" if report.passed else "FAIL"
    item.config.stash[_verdicts].append((number, title, verdict, detail))
    return report


def pytest_terminal_summary(terminalreporter, config):
    verdicts = sorted(config.stash[_verdicts], key=lambda v: v[0])
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in verdicts:
        terminalreporter.write_line(f"criterion {number:>2} {verdict}  {title}: {detail}")
