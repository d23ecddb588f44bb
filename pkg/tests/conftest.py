def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(test_acceptance.RESULTS[key])
