import re

_criteria: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m or (report.when != "call" and report.passed):
        return
    k = int(m.group(1))
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    summary = dict(report.user_properties).get("summary", m.group(2).replace("_", " "))
    if k not in _criteria or status != "PASS":
        _criteria[k] = (status, summary)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        status, summary = _criteria[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {summary}")
