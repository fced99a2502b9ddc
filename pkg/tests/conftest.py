import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fcrepair.datasets import (  # noqa: E402
    ACCEPT,
    CHECK,
    CREATE,
    NOTIFY,
    SEND,
    loan_log,
    loan_net,
    loan_net_constrained,
)
from fcrepair.transition_system import build_prefix_tree, minimize  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

# words leading to the states named s1..s7 in the loan example's transition system
LOAN_STATE_WORDS = {
    "s1": (),
    "s2": (SEND,),
    "s3": (CREATE,),
    "s4": (SEND, CHECK),
    "s5": (CREATE, CHECK),
    "s6": (SEND, CHECK, NOTIFY),
    "s7": (SEND, CHECK, NOTIFY, ACCEPT),
}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def log():
    return loan_log()


@pytest.fixture
def loan_ts():
    return minimize(build_prefix_tree(loan_log()))


@pytest.fixture
def named(loan_ts):
    """Map s1..s7 to the state ids of the minimized loan TS."""
    return {name: loan_ts.run(word) for name, word in LOAN_STATE_WORDS.items()}


@pytest.fixture
def loan_sys():
    return loan_net()


@pytest.fixture
def constrained_sys():
    return loan_net_constrained()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
