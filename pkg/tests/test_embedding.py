import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qmatrix.embedding import (
    adjoint_swap,
    embed,
    embed_matrix,
    embed_vector,
    permutation,
    phase_unitary_u1,
    selector_matrix,
    slot_change,
    unembed,
)
from qmatrix.errors import EmptyVector, MalformedEmbedding, NonSquare

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def complex_matrices(n):
    return st.tuples(arrays(float, (n, n), elements=finite), arrays(float, (n, n), elements=finite)).map(
        lambda p: p[0] + 1j * p[1]
    )


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3).flatmap(complex_matrices), st.sampled_from([1, 2, 3]))
def test_embedding_is_hermitian_and_round_trips(a, slot):
    x = embed_matrix(a, slot)
    assert np.allclose(x, x.conj().T)
    assert np.allclose(unembed(embed(a, slot)), a)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3).flatmap(complex_matrices))
def test_spectrum_is_plus_minus_singular_values_and_zeros(a):
    n = a.shape[0]
    w = np.sort(np.linalg.eigvalsh(embed_matrix(a)))
    s = np.linalg.svd(a, compute_uv=False)
    expected = np.sort(np.concatenate([s, -s, np.zeros(n)]))
    assert np.allclose(w, expected, atol=1e-9)


def test_quadratic_form_identity(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    y = rng.normal(size=3) + 1j * rng.normal(size=3)
    v1 = embed_vector(x, 1).vector
    v2 = embed_vector(y, 2).vector
    assert np.isclose(v1.conj() @ embed_matrix(a) @ v2, x.conj() @ a @ y)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_permutations_cycle_slots(rng, i):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    p = permutation(i, 2)
    assert np.allclose(p @ embed_matrix(a, i) @ p.conj().T, embed_matrix(a, i % 3 + 1))


@pytest.mark.parametrize("slot", [1, 2, 3])
def test_slot_change(rng, slot):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    v = np.kron(slot_change(slot), np.eye(2))
    assert np.allclose(v.conj().T @ embed_matrix(a, 3) @ v, embed_matrix(a, slot))


def test_adjoint_swap_and_u1(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q = np.kron(adjoint_swap(), np.eye(2))
    assert np.allclose(q @ embed_matrix(a) @ q.conj().T, embed_matrix(a.conj().T))
    u1 = phase_unitary_u1(2)
    assert np.allclose(u1 @ embed_matrix(1j * a) @ u1.conj().T, embed_matrix(a))


def test_selector_extracts_hadamard_product(rng):
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    s = selector_matrix(3)
    out = s @ np.kron(a, b) @ s.conj().T
    e00 = np.zeros((3, 3))
    e00[0, 0] = 1
    assert np.allclose(out, np.kron(a * b, e00))


def test_errors():
    with pytest.raises(NonSquare):
        embed_matrix(np.ones((2, 3)))
    with pytest.raises(EmptyVector):
        embed_vector([], 1)
    bad = embed_matrix(np.eye(2))
    bad[2, 2] = 1.0
    with pytest.raises(MalformedEmbedding):
        unembed(bad)
    with pytest.raises(ValueError):
        embed_matrix(np.eye(2), slot=4)
