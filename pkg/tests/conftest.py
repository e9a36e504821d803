"""Test-session plumbing: the acceptance-criteria summary block."""

from __future__ import annotations

import re

_ACCEPTANCE_PATTERN = re.compile(r"test_acceptance\.py::test_(c\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Prints one PASS/FAIL line per acceptance criterion after the run."""
    outcomes = {}
    for word, status in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(word, ()):
            match = _ACCEPTANCE_PATTERN.search(getattr(report, "nodeid", ""))
            if match is None:
                continue
            cid, label = match.group(1).upper(), match.group(2).replace("_", " ")
            key = (int(cid[1:]), cid, label)
            if status == "FAIL" or key not in outcomes:
                outcomes[key] = status
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (_, cid, label), status in sorted(outcomes.items()):
        terminalreporter.write_line(f"[ACCEPTANCE] {cid} {label}: {status}")
