from pathlib import Path

import pytest

from memnet.dataio.config import default_config
from memnet.device import TABLE_I

DATA = Path(__file__).parent / "data"
MNIST_DIR = DATA / "mnist"


@pytest.fixture
def params():
    return TABLE_I


@pytest.fixture
def mnist_dir():
    return MNIST_DIR


@pytest.fixture
def small_cfg():
    """A few short minibatches; enough to exercise every engine path quickly."""
    return default_config({"run.epochs": 3, "run.minibatch": 10, "run.test_samples": 50})


# (criterion, name, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for n, name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"ACCEPTANCE {n} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
