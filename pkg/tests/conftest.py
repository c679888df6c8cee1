from __future__ import annotations

import time
from contextlib import contextmanager

import pytest

_GATES: list = []
_REPORTS: list = []


class Gate:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self):
        self.detail = ""

    def report(self, title: str, text: str) -> None:
        _REPORTS.append((title, text.rstrip("\n")))

    @contextmanager
    def check(self, number: int, title: str, budget_secs: float):
        t0 = time.perf_counter()
        ok = False
        try:
            yield self
            ok = True
        finally:
            secs = time.perf_counter() - t0
            over = secs > budget_secs
            status = "PASS" if ok and not over else "FAIL"
            note = f" over budget {budget_secs:g} s" if over else ""
            line = f"criterion {number} {title}: {status} ({secs:.1f} s{note})"
            if self.detail:
                line += f" {self.detail}"
            _GATES.append((number, line))
            print(line)
            self.detail = ""
        assert secs <= budget_secs, f"took {secs:.1f} s, budget {budget_secs:g} s"


@pytest.fixture
def gate():
    return Gate()


def pytest_terminal_summary(terminalreporter):
    for title, text in _REPORTS:
        terminalreporter.section(title)
        for line in text.splitlines():
            terminalreporter.write_line(line)
    if not _GATES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_GATES):
        terminalreporter.write_line(line)
