"""Collects one-line acceptance verdicts for the terminal summary."""

LINES: list[str] = []


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    print(line)
    LINES.append(line)
    assert ok, line
