"""Shared pytest wiring: an always-visible acceptance report section."""

_ac_lines = []


def record_line(line: str) -> None:
    """Queue a line for the end-of-run acceptance summary."""
    _ac_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ac_lines:
        terminalreporter.section("acceptance criteria")
        for line in _ac_lines:
            terminalreporter.write_line(line)
