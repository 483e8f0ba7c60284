"""Shared pytest wiring for the test suite."""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance scorecard after the run.

    The acceptance tests record one human-readable pass/fail line per
    release criterion; default fd-level capture would swallow prints
    made while the tests execute, so the lines are emitted here, outside
    any captured region.  The module is looked up in ``sys.modules``
    (rather than re-imported) to reach the instance pytest actually ran.
    """
    lines = []
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] == "test_acceptance" and module is not None:
            lines = getattr(module, "SCORECARD", [])
            if lines:
                break
    if not lines:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance scorecard", sep="-", blue=True, bold=True)
    for line in lines:
        terminalreporter.write_line(line)
