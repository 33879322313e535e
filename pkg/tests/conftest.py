"""Shared pytest plumbing: the acceptance-criteria result banner.

Each acceptance test records one line here; the terminal summary prints
them after the run regardless of output capturing, so a plain
``pytest -v`` always shows one pass/fail line per criterion.
"""

from __future__ import annotations

_criterion_lines: list[tuple[int, bool, str]] = []


def record_criterion(number: int, ok: bool, text: str) -> None:
    _criterion_lines.append((number, ok, text))


def pytest_terminal_summary(terminalreporter) -> None:
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, text in sorted(_criterion_lines):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}: {text}")
