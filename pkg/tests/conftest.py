import numpy as np
import pytest

from rankverify.core import Multinomial
from rankverify.datasets import IOWA_POLL, UHLS_VALUES, iowa_poll


@pytest.fixture
def iowa():
    return iowa_poll()


@pytest.fixture
def iowa_family():
    return Multinomial(len(IOWA_POLL), sum(IOWA_POLL.values()))


@pytest.fixture
def uhls_family():
    return Multinomial(len(UHLS_VALUES), sum(UHLS_VALUES.values()))


@pytest.fixture
def rng():
    return np.random.default_rng(20160201)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
