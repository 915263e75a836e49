import pytest

_OUTCOMES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(item.user_properties).get("detail", "")
        if report.failed and not detail:
            detail = str(report.longrepr).strip().splitlines()[-1]
        _OUTCOMES[number] = (title, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, verdict, detail = _OUTCOMES[number]
        line = f"{verdict} criterion {number}: {title}"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
