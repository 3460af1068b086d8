import numpy as np
import pytest

from ricianmiso import PathlossParams, Scenario, sample_positions
from ricianmiso.streams import RandomStreams

SIGMA2 = 1e-13
P_T = 10.0

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Append ``(criterion, passed, detail)``; lines are printed at the end of the session."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def pathloss_params():
    return PathlossParams()


def make_scenario(N, K, rho=1.0, nu=0.9, lam=1e-14, seed=7, mode="uniform-disk", **kw):
    users = sample_positions(K, PathlossParams(), RandomStreams(seed).geometry(0, K), mode)
    return Scenario(N, users, rho, nu, kw.pop("P_T", P_T), kw.pop("sigma2", SIGMA2), lam, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
