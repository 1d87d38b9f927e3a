"""Shared fixtures: the acceptance-criterion recorder and its summary report."""

import pytest

CRITERIA = {
    1: "reconstruction identity",
    2: "pattern vs ED attribution",
    3: "critical coordinate arithmetic",
    4: "pattern competition signatures",
    5: "gap collapse",
    6: "analytic criticality",
    7: "order-parameter cross-check",
    8: "negative control",
    9: "unitary equivalence",
}

_RESULTS: dict = {}


class AcceptanceRecorder:
    """Collects one entry per sub-clause; a criterion passes iff all its clauses do."""

    def check(self, criterion: int, clause: str, passed: bool, detail: str = "") -> bool:
        _RESULTS.setdefault(criterion, []).append((clause, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} criterion {criterion} / {clause}: {detail}")
        return bool(passed)


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        clauses = _RESULTS.get(n)
        if not clauses:
            tr.write_line(f"FAIL criterion {n} ({title}): not evaluated")
            continue
        ok = all(passed for _, passed, _ in clauses)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n} ({title})")
        for clause, passed, detail in clauses:
            tr.write_line(f"    {'pass' if passed else 'FAIL'} {clause}: {detail}")
