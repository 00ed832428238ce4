"""Collects the acceptance summary lines and prints them after the run."""

_LINES: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    label = props.get("criterion")
    if label is None:
        return
    status = "PASS" if report.passed else "FAIL"
    _LINES[label] = f"{label} {status}: {props.get('detail', '')}"


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_LINES, key=lambda s: int(s[2:])):
        terminalreporter.write_line(_LINES[label])
