"""Acceptance criteria, one test each, at their stated tolerances.

Every criterion prints a ``[PASS]``/``[FAIL]`` line; under pytest the lines are
collected and repeated in the terminal summary.  Run this file directly to
print them without pytest.
"""
import json

import pytest

from upconcave.acceptance import run_acceptance

RESULTS = []
_cache = {}


def criterion(suite, number):
    if suite not in _cache:
        _cache[suite] = run_acceptance(suite)
    for c in _cache[suite]:
        if c.name.startswith(f"{number} "):
            line = c.line()
            print(line)
            RESULTS.append(line)
            return c
    raise LookupError(f"criterion {number} not in suite {suite}")


def _check(c):
    assert c.passed, json.dumps(c.measured, indent=1, default=str)[:4000]


def test_1_coefficient_recovery():
    _check(criterion("linearization", 1))


def test_2_linearization_inequality():
    _check(criterion("linearization", 2))


def test_3_estimator():
    _check(criterion("linearization", 3))


def test_4_sampler():
    _check(criterion("sampler", 4))


@pytest.mark.slow
def test_5_regret_bound():
    _check(criterion("regret", 5))


@pytest.mark.slow
def test_6_offline_guarantee():
    _check(criterion("offline", 6))


def test_7_containments():
    _check(criterion("classes", 7))


def test_8_matroid_geometry():
    _check(criterion("geometry", 8))


if __name__ == "__main__":
    import sys
    ok = True
    for suite, n in (("linearization", 1), ("linearization", 2), ("linearization", 3),
                     ("sampler", 4), ("regret", 5), ("offline", 6), ("classes", 7),
                     ("geometry", 8)):
        ok &= criterion(suite, n).passed
    sys.exit(0 if ok else 1)
