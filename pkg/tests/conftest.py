import pytest

from latfold.energy import mj_matrix

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def mj():
    return mj_matrix()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(log):
        terminalreporter.write_line(log[n])
