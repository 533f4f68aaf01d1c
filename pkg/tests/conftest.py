import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qlinphoton.grid import TimeGrid
from qlinphoton.model import SystemParams, realize

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture
def accept():
    """Record one acceptance line: ``accept(number, title, passed, detail)``."""

    def record(number, title, passed, detail):
        _ACCEPTANCE.append((number, title, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        tag = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{tag}] #{number:<2d} {title}: {detail}")


@pytest.fixture(scope="session")
def grid():
    return TimeGrid(-2.0, 20.0, 1e-3)


@pytest.fixture(scope="session")
def cavity():
    return realize(SystemParams.cavity(2.0, 1.0))


@pytest.fixture(scope="session")
def dpa():
    return realize(SystemParams.dpa(4.0, 1.0))


def random_params(rng, n, m, passive=False):
    """Random physical parameters; ``S_-`` from a QR factorization."""
    from scipy.stats import unitary_group

    S = unitary_group.rvs(m, random_state=rng) if m > 1 else np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(1)
    Cm = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
    Cp = np.zeros((m, n)) if passive else 0.3 * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
    H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Om = 0.5 * (H + H.conj().T)
    K = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Op = np.zeros((n, n)) if passive else 0.2 * (K + K.T)
    return SystemParams(S, Cm, Cp, Om, Op)


def random_stable_model(rng, n, m, passive=False, margin=0.0, max_rate=None):
    from qlinphoton.model import is_stable

    while True:
        g = realize(random_params(rng, n, m, passive))
        ev = np.linalg.eigvals(g.A).real
        if is_stable(g, margin) and (max_rate is None or ev.min() > -max_rate):
            return g
