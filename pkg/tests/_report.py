"""Shared sink for the acceptance summary printed at session end."""

lines: list[str] = []


def record(number: int, passed: bool, detail: str) -> None:
    verdict = "PASS" if passed else "FAIL"
    line = f"criterion {number:2d}: {verdict} - {detail}"
    lines.append(line)
    print(line)
