import _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _report.lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _report.lines:
        terminalreporter.write_line(line)
