from helpers import ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one pass/fail line per acceptance criterion into the report."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
