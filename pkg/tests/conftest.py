import pytest

CRITERIA = {}


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str):
        CRITERIA.setdefault(number, []).append((ok, detail))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok = all(o for o, _ in CRITERIA[n])
        details = "; ".join(d for _, d in CRITERIA[n])
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {details}")
