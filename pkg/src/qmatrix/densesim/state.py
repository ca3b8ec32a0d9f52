"""Quantum states over named registers, state preparation and sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..embedding import embed_vector
from ..errors import DimMismatch, NonUnitary, ZeroVector
from .kernels import apply_factors, is_unitary, layout_dim, normalize_factors

PURE = "pure"
MIXED = "mixed"


def rng_for(seed, *index):
    """Generator for operation ``index`` of the run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in index)))


@dataclass(frozen=True)
class QuantumState:
    mode: str
    layout: tuple
    data: np.ndarray

    @property
    def dim(self):
        return layout_dim(self.layout)

    def register_dim(self, name):
        return dict(self.layout)[name]

    def norm(self):
        if self.mode == PURE:
            return float(np.linalg.norm(self.data))
        return float(np.real(np.trace(self.data)))

    def probabilities(self, register):
        """Born-rule distribution of ``register``'s computational basis outcomes."""
        names = [n for n, _ in self.layout]
        if register not in names:
            raise DimMismatch(f"unknown register {register!r}")
        k = names.index(register)
        shape = [d for _, d in self.layout]
        if self.mode == PURE:
            amp = np.moveaxis(self.data.reshape(shape), k, 0).reshape(shape[k], -1)
            p = np.sum(np.abs(amp) ** 2, axis=1)
        else:
            rho = self.data.reshape(shape + shape)
            rho = np.moveaxis(rho, (k, len(shape) + k), (0, 1))
            rest = int(np.prod(shape)) // shape[k]
            rho = rho.reshape(shape[k], shape[k], rest, rest)
            p = np.real(np.einsum("iijj->i", rho))
        p = np.clip(p, 0.0, None)
        return p / p.sum()

    def condition(self, register, outcome):
        """(post-measurement state, probability) for ``register`` == outcome."""
        names = [n for n, _ in self.layout]
        k = names.index(register)
        shape = [d for _, d in self.layout]
        if self.mode == PURE:
            amp = self.data.reshape(shape).copy()
            amp = np.moveaxis(amp, k, 0)
            amp[np.arange(shape[k]) != outcome] = 0
            amp = np.moveaxis(amp, 0, k).reshape(-1)
            p = float(np.vdot(amp, amp).real)
            return (QuantumState(PURE, self.layout, amp / np.sqrt(p)) if p > 0 else None), p
        mask = np.zeros(shape)
        sel = [slice(None)] * len(shape)
        sel[k] = outcome
        mask[tuple(sel)] = 1.0
        mask = mask.reshape(-1)
        rho = self.data * np.outer(mask, mask)
        p = float(np.real(np.trace(rho)))
        return (QuantumState(MIXED, self.layout, rho / p) if p > 0 else None), p


def pure_state(vec, layout):
    vec = np.asarray(vec, dtype=complex).ravel()
    if vec.size != layout_dim(layout):
        raise DimMismatch(f"vector of length {vec.size} does not fit layout {layout}")
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ZeroVector("cannot normalize the zero vector")
    return QuantumState(PURE, tuple(layout), vec / nrm)


def prepare_state(v, which, register="sys"):
    """|V_which(v)> = V_which(v) / |v| on a single 3N-dimensional register."""
    v = np.asarray(v, dtype=complex).ravel()
    if v.size == 0 or np.linalg.norm(v) == 0:
        raise ZeroVector("state preparation needs a nonzero vector")
    emb = embed_vector(v, which).vector
    return pure_state(emb, ((register, emb.size),))


def maximally_mixed(dim, register="sys"):
    return QuantumState(MIXED, ((register, dim),), np.eye(dim, dtype=complex) / dim)


def tensor(a, b):
    """Joint state with ``a``'s registers most significant."""
    if a.mode == PURE and b.mode == PURE:
        return QuantumState(PURE, a.layout + b.layout, np.kron(a.data, b.data))
    ra = a.data if a.mode == MIXED else np.outer(a.data, a.data.conj())
    rb = b.data if b.mode == MIXED else np.outer(b.data, b.data.conj())
    return QuantumState(MIXED, a.layout + b.layout, np.kron(ra, rb))


def basis_state(layout, index=0):
    vec = np.zeros(layout_dim(layout), dtype=complex)
    vec[index] = 1.0
    return QuantumState(PURE, tuple(layout), vec)


def apply(state, u, targets, check=True):
    """Apply ``u`` to ``targets`` (register names or factors); returns a new state."""
    u = np.asarray(u, dtype=complex)
    factors = normalize_factors(state.layout, targets)
    if check and not is_unitary(u, 1e-8):
        raise NonUnitary("operator is not unitary within 1e-8")
    if state.mode == PURE:
        return QuantumState(PURE, state.layout, apply_factors(state.data, u, state.layout, factors))
    rho = apply_factors(state.data, u, state.layout, factors)
    rho = apply_factors(rho.conj().T, u, state.layout, factors).conj().T
    return QuantumState(MIXED, state.layout, rho)


def measure(state, register, shots, seed):
    """Histogram {outcome: count} of ``shots`` Born-rule draws; seeded, deterministic."""
    p = state.probabilities(register)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), p)
    return {int(k): int(c) for k, c in enumerate(counts) if c}
