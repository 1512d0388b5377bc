import _criteria


def pytest_terminal_summary(terminalreporter):
    if not _criteria.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed in sorted(_criteria.RESULTS):
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:02d} {word}  {description}")
