import sys


def pytest_terminal_summary(terminalreporter):
    # echo the per-criterion verdicts collected by test_acceptance
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
