"""Acceptance suite: runs every criterion from the registry at its stated
tolerance and reports one line per criterion.

Two criteria are currently red, deliberately and honestly:

* criterion 2: the hexagonal and cubic reference gap constants are not
  reproduced by the implemented formula (the square one is, within 0.92%).
  With the hexagonal boundary constant refined from 0.1547 to ~0.154657 the
  hexagonal target is reproduced to 0.1%; no tested reading reproduces the
  cubic target.
* criterion 3: the asserted slope constant -(l-2)/2^(l-3) differs from the
  exact finite-difference slope of the alternating sum, which equals
  -(l-1)/2^(l-2); the membership half of the criterion passes.

The exact computations behind both discrepancies are covered by green tests
in test_shearer.py and test_criterion.py.
"""

import pytest

from lll_workbench.acceptance import CHECKS, run_check


@pytest.mark.parametrize(
    "cid,title", [(cid, title) for cid, title, _ in CHECKS], ids=[c for c, _, _ in CHECKS]
)
def test_acceptance_criterion(cid, title):
    result = run_check(cid)
    line = f"criterion {cid} ({title}): {result.detail}"
    print(("PASS " if result.passed else "FAIL ") + line)
    assert result.passed, line
