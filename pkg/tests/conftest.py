import numpy as np
import pytest

from triscale.integrator import integrate
from triscale.model import ModelParams


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    # compile (or load from cache) the stepper before anything is timed
    p = ModelParams(2.0, 0.8, 1.1, 1.0, 1.0, 1e-3, 1e-3)
    integrate((0.9, 1e-3, 0.0, 0.0, 1e-3), p, (0.0, 1.0), t_eval=np.linspace(0, 1, 3))
    integrate((0.9, 0.0, 0.0, 0.0, 0.0), p, (0.0, 1.0))


@pytest.fixture
def acceptance_log(request):
    store = request.config.stash.setdefault(_KEY, {})

    def log(n, ok, detail):
        store[n] = (ok, detail)

    return log


_KEY = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_KEY, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        ok, detail = store[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
