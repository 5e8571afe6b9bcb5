import helpers


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # acceptance tests append their pass/fail lines here; echo them even
    # when output capture is on
    if helpers.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in helpers.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
