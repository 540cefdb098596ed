"""Acceptance criteria 1-10, one test each.

Every test prints its one-line PASS/FAIL report (visible with ``pytest -s``
or in the captured output of a failure) before asserting.
"""

import pytest

from ahsector.acceptance import run_check

CRITERIA = {
    1: "indicial_roots_exact",
    2: "fredholm_window_invertibility",
    3: "sector_certification",
    4: "spectral_ray_convergence",
    5: "resolvent_estimate_on_sector",
    6: "conjugation_reduction",
    7: "translated_sector_for_block",
    8: "semigroup_consistency",
    9: "hyperbolic_heat_kernel",
    10: "decomposition_decay",
}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[CRITERIA[k] for k in sorted(CRITERIA)])
def test_criterion(number):
    result = run_check(number, **({"workers": 4} if number in (5, 7) else {}))
    print(result.line())
    assert result.passed, result.line()
