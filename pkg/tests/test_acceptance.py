"""Acceptance gate: every criterion runs at its stated tolerance and prints
one pass/fail line (visible with pytest -s; the CLI `selftest` subcommand
prints the same lines)."""

import pytest

from wreathwalk.acceptance import CRITERIA, run_criterion

BUDGET_SECONDS = {
    1: 10, 2: 5, 3: 10, 4: 60, 5: 120, 6: 1, 7: 10, 8: 10, 9: 60, 10: 10, 11: 5, 12: 30,
}


@pytest.mark.parametrize("number,name", [(num, name) for num, name, _ in CRITERIA])
def test_criterion(number, name):
    result = run_criterion(number)
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} {result.number:2d} {result.name:<24s} [{result.seconds:6.1f}s] {result.detail}")
    assert result.passed, f"criterion {number} ({name}): {result.detail}"
    assert result.seconds < BUDGET_SECONDS[number], (
        f"criterion {number} took {result.seconds:.1f}s, budget {BUDGET_SECONDS[number]}s"
    )
