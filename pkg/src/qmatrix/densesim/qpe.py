"""Circuit-level phase estimation and the eigenvalue-conditioned rotation.

The phase register holds m qubits read as an integer k = sum_j b_j 2^j.
Qubit j controls U^(2^j); an inverse Fourier transform then concentrates
the amplitude on k ~ phi M / (2 pi), M = 2^m.  Outcomes are reported as
phases in (-pi, pi] so the sign of the eigenvalue survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, PrecisionOverflow, RotationOverflow
from .kernels import apply_factors, layout_dim, normalize_factors
from .state import MIXED, PURE, QuantumState

PHASE = "phase"
ROT = "rot"

# circuit-level QPE is used up to this joint dimension
CIRCUIT_LIMIT = 4096


@dataclass(frozen=True)
class EigenSample:
    raw_phase: float
    eigenvalue_estimate: float
    bits: int
    time_scale: float


def outcome_phase(k, m):
    """Register value k -> phase in (-pi, pi]."""
    big_m = 2**m
    phi = 2.0 * math.pi * (np.asarray(k) % big_m) / big_m
    return np.where(phi > math.pi, phi - 2.0 * math.pi, phi)


def register_eigenvalues(m, t_pe):
    return outcome_phase(np.arange(2**m), m) / t_pe


def check_precision(norm_bound, t_pe, m):
    if norm_bound is not None and norm_bound * abs(t_pe) > math.pi * (1 - 2.0**-m) + 1e-12:
        raise PrecisionOverflow(
            f"||H|| t_pe = {norm_bound * abs(t_pe):.6g} exceeds pi (1 - 2^-{m}); phases would alias"
        )


def _walsh_hadamard(m):
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    out = np.ones((1, 1))
    for _ in range(m):
        out = np.kron(out, h)
    return out


def _fourier(m):
    big_m = 2**m
    k = np.arange(big_m)
    return np.exp(2j * math.pi * np.outer(k, k) / big_m) / math.sqrt(big_m)


def _controlled_block(cu):
    cu = np.asarray(cu, dtype=complex)
    d2 = cu.shape[0]
    if d2 % 2 or cu.shape != (d2, d2):
        raise DimMismatch("controlled unitary must have even side")
    d = d2 // 2
    if np.max(np.abs(cu[:d, :d] - np.eye(d))) > 1e-8 or np.max(np.abs(cu[:d, d:])) > 1e-8:
        raise DimMismatch("operator is not of controlled form I (+) U")
    return cu


def _controlled_powers(cu, m):
    """Blocks U^(2^j) read off (I (+) U)^(2^j) for j < m."""
    cu = _controlled_block(cu)
    d = cu.shape[0] // 2
    out, cur = [], cu
    for _ in range(m):
        out.append(cur[d:, d:].copy())
        cur = cur @ cur
    return out


class PhaseEstimator:
    """QPE of the controlled unitary ``cu`` acting on ``targets`` of a layout."""

    def __init__(self, cu, m, t_pe, norm_bound=None):
        check_precision(norm_bound, t_pe, m)
        self.m = m
        self.t_pe = t_pe
        self.powers = _controlled_powers(cu, m)
        self.hm = _walsh_hadamard(m)
        self.f = _fourier(m)

    def _powers_apply(self, arr, layout, factors, inverse=False):
        for j, u in enumerate(self.powers):
            rows = (np.arange(2**self.m) >> j) & 1 == 1
            op = u.conj().T if inverse else u
            arr[rows] = apply_factors(arr[rows].T, op, layout, factors).T
        return arr

    def forward(self, arr, layout, factors):
        """Apply the QPE unitary to an amplitude array of shape (M, dim)."""
        arr = self.hm @ arr
        arr = self._powers_apply(arr, layout, factors)
        return self.f.conj().T @ arr

    def backward(self, arr, layout, factors):
        arr = self.f @ arr
        arr = self._powers_apply(arr, layout, factors, inverse=True)
        return self.hm @ arr

    def coherent(self, state, targets=None):
        """Unmeasured QPE on a pure state; the phase register is prepended."""
        if state.mode != PURE:
            raise ValueError("coherent phase estimation needs a pure state")
        targets = targets or [n for n, _ in state.layout]
        factors = normalize_factors(state.layout, targets)
        arr = np.zeros((2**self.m, state.dim), dtype=complex)
        arr[0] = state.data
        arr = self.forward(arr, state.layout, factors)
        return QuantumState(PURE, ((PHASE, 2**self.m),) + tuple(state.layout), arr.reshape(-1))

    def uncompute(self, state, targets=None):
        """Inverse of :meth:`coherent` applied to a state whose first register is the phase register."""
        if state.layout[0][0] != PHASE:
            raise DimMismatch("phase register must be the most significant register")
        rest = tuple(state.layout[1:])
        targets = targets or [n for n, _ in rest if n != ROT]
        factors = normalize_factors(rest, targets)
        arr = state.data.reshape(2**self.m, -1).copy()
        arr = self.backward(arr, rest, factors)
        return QuantumState(PURE, state.layout, arr.reshape(-1))

    def outcome_distribution(self, state, targets=None):
        return self.coherent(state, targets).probabilities(PHASE)


def _pure_components(state):
    if state.mode == PURE:
        return np.ones(1), state.data.reshape(1, -1)
    w, v = np.linalg.eigh(state.data)
    keep = w > 1e-12
    return w[keep] / w[keep].sum(), v[:, keep].T


def phase_estimate(cu, state, m, t_pe, seed=0, norm_bound=None, targets=None):
    """Run QPE once and measure the phase register.

    ``cu`` is the controlled unitary I (+) e^{iH t_pe}.  Mixed inputs are
    handled by drawing a pure component of the density matrix first.
    Returns the sample and the conditioned system state.
    """
    qpe = PhaseEstimator(cu, m, t_pe, norm_bound)
    if layout_dim(state.layout) * 2**m > CIRCUIT_LIMIT:
        raise PrecisionOverflow(f"joint dimension exceeds circuit limit {CIRCUIT_LIMIT}; use the ideal sampler")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, comps = _pure_components(state)
    idx = rng.choice(len(weights), p=weights) if len(weights) > 1 else 0
    pure = QuantumState(PURE, state.layout, comps[idx])
    joint = qpe.coherent(pure, targets)
    p = joint.probabilities(PHASE)
    k = int(rng.choice(len(p), p=p))
    post, _ = joint.condition(PHASE, k)
    sys_vec = post.data.reshape(2**m, -1)[k]
    sys_vec = sys_vec / np.linalg.norm(sys_vec)
    phi = float(outcome_phase(k, m))
    sample = EigenSample(phi, phi / t_pe, m, t_pe)
    return sample, QuantumState(PURE, state.layout, sys_vec)


def controlled_rotation_and_postselect(state, c, t_pe, uncompute=None, register=PHASE):
    """Rotate an ancilla by c * lambda(register), optionally uncompute, keep outcome 1.

    Returns (postselected state without the ancilla, exact success probability).
    """
    if state.mode != PURE:
        raise ValueError("rotation needs a pure state")
    names = [n for n, _ in state.layout]
    k = names.index(register)
    m = int(round(math.log2(state.layout[k][1])))
    lam = register_eigenvalues(m, t_pe)
    shape = [d for _, d in state.layout]
    amp = np.moveaxis(state.data.reshape(shape), k, 0).reshape(shape[k], -1)
    support = np.sum(np.abs(amp) ** 2, axis=1) > 1e-14
    if np.any(np.abs(c * lam[support]) > 1 + 1e-12):
        raise RotationOverflow(f"c * |lambda| reaches {np.max(np.abs(c * lam[support])):.6g} > 1")
    s = np.clip(c * lam, -1.0, 1.0)
    cos = np.sqrt(1.0 - s**2)
    rot = np.stack([amp * cos[:, None], amp * s[:, None]], axis=-1)
    rot = np.moveaxis(rot.reshape([shape[k]] + shape[:k] + shape[k + 1:] + [2]), 0, k)
    joint = QuantumState(PURE, tuple(state.layout) + ((ROT, 2),), rot.reshape(-1))
    if uncompute is not None:
        joint = uncompute(joint)
    post, p = joint.condition(ROT, 1)
    if post is None:
        return None, 0.0
    vec = post.data.reshape(-1, 2)[:, 1]
    return QuantumState(PURE, tuple(state.layout), vec / np.linalg.norm(vec)), p
