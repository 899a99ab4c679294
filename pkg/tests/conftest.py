import numpy as np
import pytest

from murlab.observables import DiscreteObservable, Instrument, sharp_observable
from murlab.qcore import QuantumState, random_density

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_sharp(rng, dim=2) -> DiscreteObservable:
    """Sharp observable with a random eigenbasis and distinct integer-spaced values."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(g)
    values = np.sort(rng.choice(np.arange(-4, 5), size=dim, replace=False)).astype(float)
    h = q @ np.diag(values) @ q.conj().T
    return sharp_observable(h)


def random_stochastic(rng, rows, cols) -> np.ndarray:
    return rng.dirichlet(np.ones(rows), size=cols).T


def random_benign_instrument(rng, b: DiscreteObservable, outcomes=3) -> Instrument:
    """Instrument whose Kraus operators are diagonal (up to a permutation) in ``b``'s eigenbasis."""
    dim = b.dim
    basis = np.column_stack([np.linalg.eigh(e)[1][:, -1] for e in b.effects])
    weights = rng.dirichlet(np.ones(outcomes), size=dim)  # per basis vector
    kraus = []
    for n in range(outcomes):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, dim))
        perm = np.eye(dim)[:, rng.permutation(dim)]
        k = basis @ perm @ np.diag(np.sqrt(weights[:, n]) * phases) @ basis.conj().T
        kraus.append((k,))
    return Instrument(tuple(float(v) for v in range(outcomes)), tuple(kraus))


def random_state(rng, dim=2) -> QuantumState:
    return random_density(rng, dim)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
