import numpy as np
import pytest


def ladder(d):
    """Independent truncated annihilator, built without the package."""
    a = np.zeros((d, d))
    for k in range(1, d):
        a[k - 1, k] = np.sqrt(k)
    return a


def random_density(rng, d, rank):
    vecs = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    w = rng.dirichlet(np.ones(rank))
    q, _ = np.linalg.qr(vecs)
    return (q * w) @ q.conj().T


def random_hermitian(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (m + m.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
