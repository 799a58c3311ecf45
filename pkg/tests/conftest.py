import pytest

# criterion -> list of (part, passed, detail), filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(criterion, part, passed, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
        print(f"{criterion} {part}: {'PASS' if passed else 'FAIL'} {detail}".rstrip())
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE, key=lambda c: int(c[2:])):
        parts = ACCEPTANCE[criterion]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name} {'pass' if p else 'FAIL'} ({d})" if d else
                           f"{name} {'pass' if p else 'FAIL'}" for name, p, d in parts)
        tr.write_line(f"{criterion}: {'PASS' if ok else 'FAIL'} -- {detail}")
