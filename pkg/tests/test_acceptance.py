"""Acceptance criteria, one test each.

Every test prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary. Run this file directly for the lines alone:

    python3 tests/test_acceptance.py
"""

import pytest

from parsumi import experiments as X

LINES = []

CRITERIA = {
    1: ("7x12 recovery study", lambda: X.small_recovery_study(trials=100, need=95, threshold=5.0)),
    2: ("exact completion, 25% observed", lambda: X.exact_completion_study(runs=20, need=16)),
    3: ("40x60 phase grid vs oracle", lambda: X.phase_grid_study(trials=10, factor=2.0)),
    4: ("E-step vs exhaustive search", lambda: X.estep_oracle_study(trials=1000)),
    5: ("Jacobian vs finite differences", lambda: X.jacobian_study(instances=20, step=1e-6, tol=1e-5)),
    6: ("augmented merit monotonicity", lambda: X.monotonicity_study(solves=50, min_safeguards=5)),
    7: ("majorization chain", lambda: X.majorization_study(pairs=100, slack=1e-10)),
    8: ("convex initializer and final fit", lambda: X.initializer_study()),
}


def run(k):
    title, fn = CRITERIA[k]
    res = fn()
    line = f"criterion {k} {'PASS' if res.passed else 'FAIL'}  {title}: {res.summary} [{res.seconds:.0f}s]"
    LINES.append(line)
    print(line)
    return res


@pytest.mark.acceptance
@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    res = run(k)
    assert res.passed, res.summary


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        run(k)
