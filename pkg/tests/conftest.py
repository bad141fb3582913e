"""Shared fixtures and the acceptance summary hook."""

# one "criterion N (<label>): PASS/FAIL" line per acceptance criterion,
# printed after the pytest summary so the gate is visible in plain runs
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
