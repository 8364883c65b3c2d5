import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import report  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(report.LINES, key=report.order):
            terminalreporter.write_line(line)
