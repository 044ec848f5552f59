import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pnockit.optimizer import build_static_design  # noqa: E402
from pnockit.rules import build_rule_tables  # noqa: E402
from pnockit.sim import SystemConfig, default_il_matrix  # noqa: E402

# frozen oracle outputs, see oracles.py
GAMMA_Q9750_BR10_46G2 = 0.05051454475188299
FIL_Q9750_BR10_N55 = 7.671590087597373
TOTAL_Q7000_BR10_N55 = 12.550349664910645


@pytest.fixture(scope="session")
def system_cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def system_matrix(system_cfg):
    return default_il_matrix(system_cfg)


@pytest.fixture(scope="session")
def system_design(system_matrix):
    return build_static_design(system_matrix)


@pytest.fixture(scope="session")
def system_rules(system_design, system_matrix):
    return build_rule_tables(system_design, system_matrix)


# acceptance criteria report: one line per criterion in the terminal summary

_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, True, []])
    entry[1] = entry[1] and rep.passed
    entry[2].extend(getattr(item, "criterion_notes", []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, notes = _CRITERIA[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)


@pytest.fixture
def note(request):
    """Attach a short measured value to the criterion's summary line."""
    request.node.criterion_notes = []
    return request.node.criterion_notes.append
