"""Hermitian embeddings of square matrices and the fixed index-register gates.

A matrix ``A`` of side N is placed in one off-diagonal block of a 3N x 3N
Hermitian matrix ``X_s(A) = R_s (x) A + R_s^dag (x) A^dag``.  The three-level
factor is the *index register*; the gates here (P_i, U_1) act on it alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyVector, MalformedEmbedding, NonSquare

# (row block, col block) holding A for each slot
SLOT_BLOCKS = {1: (0, 1), 2: (1, 2), 3: (0, 2)}

SQRT_MINUS_I = np.exp(-0.25j * np.pi)
SQRT_I = np.exp(0.25j * np.pi)


def as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise NonSquare(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def allclose(a, b, tol):
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0) <= tol)


def index_unit(slot):
    """The 3x3 matrix R_slot."""
    r = np.zeros((3, 3))
    r[SLOT_BLOCKS[slot]] = 1.0
    return r


def _check_slot(slot):
    if slot not in SLOT_BLOCKS:
        raise ValueError(f"slot must be 1, 2 or 3, got {slot!r}")


@dataclass(frozen=True)
class EmbeddedHermitian:
    slot: int
    base_dim: int
    matrix: np.ndarray

    def block(self, i, j):
        n = self.base_dim
        return self.matrix[i * n:(i + 1) * n, j * n:(j + 1) * n]


@dataclass(frozen=True)
class EmbeddedVector:
    which: int
    base_dim: int
    vector: np.ndarray


def embed_matrix(a, slot=3):
    """Plain-array version of :func:`embed`."""
    _check_slot(slot)
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix must be square, got {a.shape}")
    r = index_unit(slot)
    return np.kron(r, a) + np.kron(r.T, a.conj().T)


def embed(a, slot=3):
    a = as_matrix(a)
    return EmbeddedHermitian(slot, a.shape[0], embed_matrix(a, slot))


def embed_vector(x, which):
    if which not in (1, 2):
        raise ValueError(f"which must be 1 or 2, got {which!r}")
    x = np.asarray(x, dtype=complex).ravel()
    if x.size == 0:
        raise EmptyVector("cannot embed an empty vector")
    r = np.zeros(3)
    r[0 if which == 1 else 2] = 1.0
    return EmbeddedVector(which, x.size, np.kron(r, x))


# columns are images of the block basis vectors
_INDEX_PERMUTATIONS = {
    1: np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex),
    2: np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex),
    3: np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex),
}


def index_permutation(i):
    """The 3x3 core of P_i; P_i itself is this tensored with the identity."""
    _check_slot(i)
    return _INDEX_PERMUTATIONS[i].copy()


def permutation(i, n):
    """P_i of side 3n, mapping X_i(A) to X_{i mod 3 + 1}(A) by conjugation."""
    return np.kron(index_permutation(i), np.eye(n))


def slot_change(slot):
    """Index-register unitary V with V^dag X_3(A) V = X_slot(A)."""
    if slot == 3:
        return np.eye(3, dtype=complex)
    if slot == 2:
        return index_permutation(2)
    if slot == 1:
        return index_permutation(2) @ index_permutation(1)
    _check_slot(slot)


def adjoint_swap():
    """Index-register unitary Q with Q X_3(A) Q = X_3(A^dag)."""
    return index_permutation(1) @ index_permutation(2)


def index_u1():
    return np.diag([SQRT_MINUS_I, 1.0, SQRT_I]).astype(complex)


def phase_unitary_u1(n):
    """diag(sqrt(-i) I, I, sqrt(i) I); U_1 X_3(iM) U_1^dag = X_3(M)."""
    return np.kron(index_u1(), np.eye(n))


def selector_matrix(n):
    """S = sum_i |i><i| (x) |0><i|, an n^2 x n^2 matrix with n ones.

    Composite index is row-major with the left factor most significant, so
    S (A (x) B) S^dag = (A o B) (x) |0><0|.
    """
    s = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        s[i * n, i * n + i] = 1.0
    return s


def unembed(x, slot=None, tol=1e-10):
    """Read A back from its block; rejects matrices with stray blocks."""
    if isinstance(x, EmbeddedHermitian):
        slot, mat, n = x.slot, x.matrix, x.base_dim
    else:
        mat = as_matrix(x)
        if mat.shape[0] % 3 or mat.shape[0] != mat.shape[1]:
            raise MalformedEmbedding(f"side must be a multiple of 3, got {mat.shape}")
        n = mat.shape[0] // 3
        slot = 3 if slot is None else slot
    _check_slot(slot)
    i, j = SLOT_BLOCKS[slot]
    expected = embed_matrix(mat[i * n:(i + 1) * n, j * n:(j + 1) * n], slot)
    scale = max(1.0, float(np.max(np.abs(mat), initial=0.0)))
    if not allclose(mat, expected, tol * scale):
        raise MalformedEmbedding(f"matrix is not a slot-{slot} embedding")
    return mat[i * n:(i + 1) * n, j * n:(j + 1) * n].copy()
