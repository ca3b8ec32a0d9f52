import numpy as np
import pytest

from qmatrix.densesim import MatrixRegistry
from qmatrix.functions import DEFAULT_FUNCTIONS

NESTED = "had(tensor(mult(A1,A2),fn:h(A3)),ksum(A6,add(A4,A5)))"


def rand_complex(rng, n, scale=0.5):
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


def rand_hermitian(rng, n, scale=0.5):
    a = rand_complex(rng, n, scale)
    return 0.5 * (a + a.conj().T)


def nested_registry(seed):
    rng = np.random.default_rng(seed)
    mats = {f"A{k}": rand_complex(rng, 2) for k in (1, 2, 4, 5, 6)}
    mats["A3"] = rand_hermitian(rng, 2)
    return MatrixRegistry(mats)


def h_functions():
    fns = dict(DEFAULT_FUNCTIONS)
    fns["h"] = fns["sin"]
    return fns


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
