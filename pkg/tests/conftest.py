import numpy as np
import pytest

from nhur import fock


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def boson80():
    c, cd = fock.ladder(80)
    x0, p0 = fock.position_momentum(80)
    return {"c": c, "cdag": cd, "x0": x0, "p0": p0}


@pytest.fixture(scope="session")
def canonical80():
    t = fock.canonical_transform(80, 0.3)
    a, b = fock.pseudo_boson_pair(t)
    x, p = fock.xp_pair(a, b)
    return {"T": t, "a": a, "b": b, "X": x, "P": p, "metric": t.metric()}


def real_spectrum_hamiltonian(rng, n, spread=0.3):
    """H = V diag(E) V^-1 with distinct real E and a moderately non-unitary V."""
    e = np.sort(rng.uniform(-2, 2, n))
    while np.min(np.diff(e)) < 0.2:
        e = np.sort(rng.uniform(-2, 2, n))
    v = np.eye(n) + spread * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return v @ np.diag(e) @ np.linalg.inv(v), v, e


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
