"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints its PASS/FAIL line with the measured margins; the lines are
also collected and repeated in the terminal summary. Run directly with
``python3 tests/test_acceptance.py`` to get only the twelve lines.
"""

import sys

import pytest

from torictheta.verify import CHECKS, SUITES, VerifyContext

RESULTS = []


@pytest.fixture(scope="module")
def ctx():
    return VerifyContext(seed=7, jobs=1)


@pytest.mark.parametrize("name", SUITES["all"])
def test_criterion(name, ctx):
    res = CHECKS[name](ctx)
    RESULTS.append(res.line())
    print(res.line())
    assert res.passed, res.line()


if __name__ == "__main__":
    context = VerifyContext(seed=7)
    ok = True
    for name in SUITES["all"]:
        res = CHECKS[name](context)
        print(res.line(), flush=True)
        ok &= res.passed
    sys.exit(0 if ok else 1)
