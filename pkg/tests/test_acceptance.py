"""Acceptance gate: every criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one pass/fail line
per criterion (the whole gate takes a few minutes; criteria 3 and 4 carry
real flow integrations).  The same checks back `krflab verify`.
"""

import pytest

import krflab.verify as V

_NAMES = {idx: name for idx, name, _ in V.CRITERIA}


@pytest.fixture(scope="module")
def opts():
    return V.VerifyOptions(seed=0, flow_grid=64)


@pytest.mark.parametrize("index", sorted(_NAMES), ids=[_NAMES[i] for i in sorted(_NAMES)])
def test_criterion(index, opts):
    result = V.run_criterion(index, opts)
    status = "PASS" if result.passed else "FAIL"
    print(f"criterion {index} [{_NAMES[index]}]: {status} ({result.elapsed:.1f}s)")
    assert result.passed, "\n" + V.format_table([result])
