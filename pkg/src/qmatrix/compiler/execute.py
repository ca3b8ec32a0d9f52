"""Run compiled programs on the dense backend.

:func:`execute` folds the step graph into one matrix on the program layout;
shared fragments and repeated blocks are evaluated once (repetitions by
binary powering).  :func:`apply_program` pushes a state through the steps
instead, materializing only repeated bodies.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..densesim.kernels import Backend, controlled, layout_dim, lift
from ..densesim.state import PURE, QuantumState
from ..errors import DimMismatch, DomainViolation
from ..functions import lookup
from .lowering import gate_matrix
from .program import CTL, IDX, AncillaInit, Fixed, Inverse, QueryExp, Repeat, Seq, SpectralTransform

# repeated bodies up to this count are applied step by step to states
_UNROLL = 16


def _nearest_unitary(u):
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def unitary_power(u, count):
    """u**count by repeated squaring, re-unitarizing each square.

    Plain powering lets round-off grow like (1 + delta)^count, which is
    fatal for the 1e6..1e12 repetitions nested products produce.
    """
    result = np.eye(u.shape[0], dtype=complex)
    base = u
    while count:
        if count & 1:
            result = base @ result
        count >>= 1
        if count:
            base = _nearest_unitary(base @ base)
    return _nearest_unitary(result)


class Executor:
    def __init__(self, program, backend=None, functions=None):
        self.program = program
        self.layout = tuple(program.layout)
        self.dim = layout_dim(self.layout)
        self.backend = backend or Backend(program.registry)
        self.functions = functions if functions is not None else program.functions
        self._ops = {}

    # ------------------------------------------------------------- operators
    def _targets(self, factors, ctl):
        return ((CTL, 1, 2, 1),) + tuple(factors) if ctl else tuple(factors)

    def primitive(self, step):
        """Full-layout matrix of a primitive step."""
        if isinstance(step, QueryExp):
            local = self.backend.query_exp(step.name, step.slot, step.sign, step.tau, step.controlled)
            return lift(local, self.layout, self._targets(step.targets, step.controlled))
        if isinstance(step, Fixed):
            g = gate_matrix(step.gate, step.dagger)
            if step.controlled:
                g = controlled(g)
            return lift(g, self.layout, self._targets([(IDX, 1, 3, 1)], step.controlled))
        if isinstance(step, AncillaInit):
            return np.eye(self.dim, dtype=complex)
        raise TypeError(f"not a primitive: {step!r}")

    def operator(self, step=None):
        step = self.program.root if step is None else step
        key = id(step)
        if key in self._ops:
            return self._ops[key]
        if isinstance(step, (QueryExp, Fixed, AncillaInit)):
            op = self.primitive(step)
        elif isinstance(step, Seq):
            op = np.eye(self.dim, dtype=complex)
            for s in step.steps:
                op = self.operator(s) @ op
        elif isinstance(step, Repeat):
            op = unitary_power(self.operator(step.body), int(step.count))
        elif isinstance(step, Inverse):
            op = self.operator(step.body).conj().T
        elif isinstance(step, SpectralTransform):
            op = self._spectral(step)
        else:
            raise TypeError(f"unknown step {step!r}")
        self._ops[key] = op
        return op

    def _logical_weights(self, ancillas):
        """Diagonal of the projector onto idx blocks {0, 2} and the given ancillas in |0>."""
        layout = [(n, d) for n, d in self.layout if n != CTL]
        grids = np.indices([d for _, d in layout]).reshape(len(layout), -1)
        keep = np.ones(grids.shape[1], dtype=bool)
        for k, (name, _) in enumerate(layout):
            if name == IDX:
                keep &= grids[k] != 1
            elif name in ancillas:
                keep &= grids[k] == 0
        return keep.astype(float)

    def _spectral(self, step):
        body = self.operator(step.body)
        d = body.shape[0]
        if step.controlled:
            half = d // 2
            body = body[half:, half:]
        tri, z = scipy.linalg.schur(body, output="complex")
        lam = np.angle(np.diag(tri)) / step.tau
        spec = lookup(step.function, self.functions)
        fn = spec.part(step.part)
        if step.part == "ratio" and spec.ratio_at_zero is None:
            g = self._singular_ratio(fn, lam, z, step)
        else:
            g = np.asarray(fn(lam), dtype=float)
        if not np.all(np.isfinite(g)):
            raise DomainViolation(f"{step.function}: {step.part} part undefined on the argument spectrum")
        w = (z * np.exp(1j * g * step.t)) @ z.conj().T
        return controlled(w) if step.controlled else w

    def _singular_ratio(self, fn, lam, z, step):
        """even(l)/l when it has no limit at 0: zero modes outside the logical sector map to 0."""
        mask = self._logical_weights(step.ancillas)
        weight = (np.abs(z) ** 2 * mask[:, None]).sum(axis=0)
        logical = weight > 0.5
        scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
        gap = float(np.min(np.abs(lam[logical]), initial=np.inf))
        if gap < 1e-6 * scale:
            raise DomainViolation(f"{step.function}: argument has a zero eigenvalue; even part over lambda is undefined")
        g = np.asarray(fn(lam), dtype=float)
        g[(~logical) & (np.abs(lam) < 0.5 * gap)] = 0.0
        return g

    # ---------------------------------------------------------------- states
    def apply(self, state, step=None, inverse=False):
        """Apply the program (or a sub-step) to a pure state on the program layout."""
        step = self.program.root if step is None else step
        if isinstance(step, Seq):
            seq = reversed(step.steps) if inverse else step.steps
            for s in seq:
                state = self.apply(state, s, inverse)
            return state
        if isinstance(step, Inverse):
            return self.apply(state, step.body, not inverse)
        if isinstance(step, Repeat) and step.count <= _UNROLL:
            for _ in range(step.count):
                state = self.apply(state, step.body, inverse)
            return state
        if isinstance(step, AncillaInit):
            return state
        op = self.operator(step)
        if inverse:
            op = op.conj().T
        if state.mode == PURE:
            return QuantumState(PURE, state.layout, op @ state.data)
        return QuantumState(state.mode, state.layout, op @ state.data @ op.conj().T)


def execute(program, backend=None, functions=None):
    """The unitary implemented by ``program`` on its full register layout."""
    return Executor(program, backend, functions).operator()


def apply_program(program, state, backend=None, functions=None):
    if tuple(state.layout) != tuple(program.layout):
        raise DimMismatch(f"state layout {state.layout} does not match program layout {program.layout}")
    return Executor(program, backend, functions).apply(state)
