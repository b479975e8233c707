"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the pass/fail
matrix, or via the CLI as ``crbmkit verify-all``.
"""

import time

import pytest

from crbmkit.verify import CRITERIA

RUNTIME_CAPS = {
    "table1": 11.0,       # < 1 s for the exact rows, < 10 s for K(1e5)
    "packing": 30.0,
    "universal": 300.0,
    "divergence": 120.0,
    "dimension": 60.0,
    "mrf": 60.0,
    "ltn": 60.0,
    "bounds": 10.0,
    "oracles": 120.0,
}


@pytest.mark.parametrize("name,claim,fn", CRITERIA,
                         ids=[name for name, _, _ in CRITERIA])
def test_acceptance_criterion(name, claim, fn):
    start = time.time()
    passed, detail = fn(0)
    elapsed = time.time() - start
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] {name} ({elapsed:.1f}s): {claim} -- {detail}")
    assert passed, f"{name}: {detail}"
    assert elapsed <= RUNTIME_CAPS[name], f"{name} took {elapsed:.1f}s"


@pytest.mark.parametrize("offset", [1, 2])
def test_randomized_criteria_stable_across_seeds(offset):
    from crbmkit.verify import _crit_divergence, _crit_mrf, _crit_universal
    for fn in (_crit_universal, _crit_divergence, _crit_mrf):
        passed, detail = fn(offset)
        assert passed, detail
