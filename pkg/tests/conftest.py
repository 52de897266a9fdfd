import numpy as np
import pytest

from oneleg.spectral_field import TorusGrid


@pytest.fixture(scope="session")
def grid():
    return TorusGrid(32)


@pytest.fixture(scope="session")
def small_grid():
    return TorusGrid(16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


FORCING_MODES = (((1, 2), (2.0, -1.0)), ((3, -1), (0.5j, 1.5j)))


def make_cfg(grid, theta=0.75, tau=0.05, steps=20, nu=0.1, u_amp=1.0, f_amp=1.0,
             seed=7, profile="constant", **kw):
    from oneleg.spectral_field import random_divfree_field
    from oneleg.stepper import ForcingSpec, RunConfig
    modes = FORCING_MODES if f_amp else ()
    forcing = ForcingSpec(modes=modes, profile=profile, frequency=1.3, phase=0.4,
                          amplitude=f_amp if f_amp else None)
    u0 = random_divfree_field(grid, seed, amplitude=u_amp)
    return RunConfig(nu=nu, theta=theta, tau=tau, steps=steps, grid=grid, forcing=forcing,
                     u0=u0, **kw)


@pytest.fixture
def cfg_factory():
    return make_cfg


# --- acceptance criteria lines ---------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or rep.when not in ("setup", "call"):
        return
    n, text = m.args
    ok = rep.passed if rep.when == "call" else not rep.failed
    prev = _CRITERIA.get(n, (text, True))
    _CRITERIA[n] = (text, prev[1] and ok and not rep.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
