"""Shared pytest wiring.

Collects one verdict line per acceptance gate so the end-of-run summary
shows them even when every test passes under output capture.
"""

from __future__ import annotations

_VERDICTS: list[tuple[str, bool]] = []


def record_verdict(label: str, passed: bool) -> None:
    _VERDICTS.append((label, passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance summary")
    for label, passed in _VERDICTS:
        terminalreporter.write_line(f"{label}: {'PASS' if passed else 'FAIL'}")
