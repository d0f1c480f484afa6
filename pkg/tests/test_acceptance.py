"""One test per acceptance criterion, tolerances as pinned in the harness.

Each test prints a ``[PASS]``/``[FAIL]`` line; the lines are repeated in the
terminal summary.  Criteria 3 and 8 are expected to fail (see the README):
they are left red rather than weakened.

Run standalone with ``python tests/test_acceptance.py``.
"""
import json

import pytest

from finslervol.acceptance import CRITERIA

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # standalone run
    ACCEPTANCE_LINES = []


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda k: f"criterion_{k}")
def test_criterion(number):
    result = CRITERIA[number](0)
    print(result.line())
    ACCEPTANCE_LINES.append(result.line())
    assert result.passed, json.dumps(result.details, default=str)[:600]


if __name__ == "__main__":
    import sys

    failed = 0
    for k in sorted(CRITERIA):
        r = CRITERIA[k](0)
        print(r.line(), flush=True)
        failed += not r.passed
    sys.exit(1 if failed else 0)
