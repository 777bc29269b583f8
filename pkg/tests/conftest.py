import os
import re
import sys

sys.path.insert(0, os.path.dirname(__file__))

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one of the numbered acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m and rep.when == "call" or (m and outcome == "error"):
                rows[int(m.group(1))] = (m.group(2), "PASS" if outcome == "passed" else "FAIL", rep.duration)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(rows):
        name, verdict, secs = rows[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {name.replace('_', ' ')}  ({secs:.2f}s)")
