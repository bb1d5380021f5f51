"""Repeat the acceptance suite's checklist lines in the terminal summary,
where default output capturing cannot hide them."""

acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance checklist")
        for line in acceptance_lines:
            terminalreporter.line(line)
