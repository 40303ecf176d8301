"""Acceptance gate: one test per numbered criterion, tolerances pinned
inside the acceptance module.

The whole gate runs once per session (about ten minutes, Monte Carlo
heavy) and each test reports its criterion's PASS/FAIL line.  Criteria 7
and 8 assert asymptotic trends at error bands their pre-registered sample
sizes and horizons cannot reach; they fail honestly at this scale and the
per-check details say by how much.  Deselect with `-m "not acceptance"`.
"""

import pytest

from occulab import acceptance

CRITERIA = list(range(1, 12))


@pytest.fixture(scope="session")
def gate():
    results = acceptance.run_all(out=None)
    return {r.number: r for r in results}


@pytest.mark.acceptance
@pytest.mark.parametrize("number", CRITERIA)
def test_criterion(gate, number):
    res = gate[number]
    print(res.line())
    for name, ok in res.checks.items():
        print(f"    {'ok' if ok else 'FAILED'}: {name}")
    assert res.passed, res.detail
