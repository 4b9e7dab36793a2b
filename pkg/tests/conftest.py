import warnings

import pytest

from levysim.models import make_model


@pytest.fixture(autouse=True)
def _quiet_numerics():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


@pytest.fixture(scope="session")
def bm():
    return make_model("BM", sigma=1.0)


@pytest.fixture(scope="session")
def nig():
    return make_model("NIG", alpha=10.0, beta=1.0, delta=1.0)


_CRITERIA = {}
N_CRITERIA = 10


@pytest.fixture(scope="session")
def criterion_log():
    """Records ``number -> (passed, detail)`` for the acceptance summary."""
    return _CRITERIA


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        if k in _CRITERIA:
            ok, detail = _CRITERIA[k]
            terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {k:2d}: NOT RUN")
