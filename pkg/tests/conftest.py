import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay acceptance verdict lines after the run.

    The acceptance tests write one PASS/FAIL line per criterion; pytest's
    fd-level capture swallows direct writes for passing tests, so the
    collected lines are printed here, where output is never captured.
    """
    mod = (sys.modules.get("test_acceptance")
           or sys.modules.get("tests.test_acceptance"))
    lines = getattr(mod, "CRITERION_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
