"""Collects one verdict line per acceptance criterion and prints them at the end."""

from collections import defaultdict

ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)
TITLES: dict[int, str] = {}


def record(criterion: int, title: str, part: str, ok: bool, detail: str) -> bool:
    TITLES[criterion] = title
    ACCEPTANCE[criterion].append((part, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"criterion {c} {verdict}: {TITLES[c]}")
        for part, ok, detail in parts:
            tr.write_line(f"    [{'ok' if ok else 'FAIL'}] {part}: {detail}")
