import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from octalab.spaces import lp

settings.register_profile("octalab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("octalab")

P_VALUES = [1.0, 1.5, 2.0, 3.0, math.inf]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def spaces_up_to(d):
    return [lp(p, n) for p in P_VALUES for n in range(1, d + 1)]


@pytest.fixture
def verdict(request):
    """Let an acceptance test downgrade its PASS line to INCONCLUSIVE, with a note."""
    notes = request.config.__dict__.setdefault("_octalab_verdicts", {})

    def record(status, detail=""):
        notes[request.node.nodeid] = (status, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    notes = config.__dict__.get("_octalab_verdicts", {})
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when not in ("call", "setup"):
                continue
            if outcome == "passed" and rep.when == "setup":
                continue
            name = nodeid.split("::", 1)[1]
            status, detail = notes.get(nodeid, ("PASS", "")) if outcome == "passed" else ("FAIL", "")
            lines.append((name, status, detail))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(lines):
        terminalreporter.write_line(f"{status:<12} {name}" + (f"  ({detail})" if detail else ""))
