"""Collects the one-line criterion verdicts of the acceptance suite and prints them at the end."""

import re

VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(VERDICTS, key=lambda s: (int(re.match(r"\d+", s.split()[1]).group()), s)):
        terminalreporter.write_line(line)
