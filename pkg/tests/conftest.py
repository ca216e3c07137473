import numpy as np
import pytest

from dplds import StateSpaceModel


def random_model(rng, n, m, q, rho=0.9, feedthrough=True):
    A = rng.standard_normal((n, n))
    if n:
        A *= rho / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((q, n))
    D = rng.standard_normal((q, m)) if feedthrough else np.zeros((q, m))
    return StateSpaceModel(A, B, C, D)


def random_spd(rng, d, cond_floor=0.1):
    G = rng.standard_normal((d, d))
    return G @ G.T / d + cond_floor * np.eye(d)


@pytest.fixture
def rng():
    return np.random.default_rng(20211014)
