"""Shared pytest hooks.

The acceptance tests record one verdict line per criterion; printing
from inside a test is swallowed by capture, so the lines are replayed
in the terminal summary where they always reach the report.
"""

acceptance_verdicts = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_verdicts:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_verdicts:
            terminalreporter.write_line(line)
