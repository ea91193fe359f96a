import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    if results is not None and results.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results.RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
