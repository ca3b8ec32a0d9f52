"""Dense kernels: Hermitian exponentials, primitive queries, register-wise application.

Registers are described by a *layout*, an ordered tuple of ``(name, dim)``
pairs; the first register is the most significant.  An operator acts on a
tuple of *factors* ``(name, left, mid, right)``: the ``mid`` factor of
register ``name`` viewed as ``left x mid x right`` (row-major).  A whole
register is ``(name, 1, dim, 1)``.
"""

from __future__ import annotations

import math

import numpy as np

from ..embedding import embed_matrix, slot_change
from ..errors import DimMismatch, NonUnitary, NotHermitian


def expm_hermitian(h, t):
    """e^{iHt} through the eigendecomposition of Hermitian H."""
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if h.shape[0] != h.shape[1] or np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-10 * scale:
        raise NotHermitian("generator is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(1j * w * t)) @ v.conj().T


def is_unitary(u, tol=1e-8):
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])), initial=0.0) <= tol)


def controlled(u):
    """|0><0| (x) I + |1><1| (x) U with the control most significant."""
    d = u.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = u
    return out


class Backend:
    """Realizes the primitive unitaries e^{+-i X_slot(A_j) tau} exactly.

    Tallies every query so callers can report query complexity.
    """

    def __init__(self, registry):
        self.registry = registry
        self.queries: dict[str, int] = {}
        self._eig = {}

    def _eigh(self, name):
        if name not in self._eig:
            x = embed_matrix(self.registry.matrix(name), 3)
            self._eig[name] = np.linalg.eigh(x)
        return self._eig[name]

    def query_exp(self, name, slot=3, sign=1, tau=1.0, controlled_=False):
        """e^{sign i X_slot(A) tau} on idx (x) data; doubled (control first) if controlled."""
        w, v = self._eigh(name)
        self.queries[name] = self.queries.get(name, 0) + 1
        u3 = (v * np.exp(1j * sign * w * tau)) @ v.conj().T
        n = self.registry.dim(name)
        if slot != 3:
            vs = np.kron(slot_change(slot), np.eye(n))
            u3 = vs.conj().T @ u3 @ vs
        return controlled(u3) if controlled_ else u3


def query_exp(registry, name, slot=3, sign=1, tau=1.0, controlled_=False):
    return Backend(registry).query_exp(name, slot, sign, tau, controlled_)


def layout_dim(layout):
    return math.prod(d for _, d in layout)


def whole(name, dim):
    return (name, 1, dim, 1)


def normalize_factors(layout, targets):
    dims = dict(layout)
    out = []
    for t in targets:
        if isinstance(t, str):
            if t not in dims:
                raise DimMismatch(f"unknown register {t!r}")
            out.append(whole(t, dims[t]))
        else:
            name, l, m, r = t
            if name not in dims or l * m * r != dims[name]:
                raise DimMismatch(f"factor {t!r} does not fit register of dim {dims.get(name)}")
            out.append((name, int(l), int(m), int(r)))
    names = [f[0] for f in out]
    if len(set(names)) != len(names):
        raise DimMismatch(f"register targeted twice in {targets!r}")
    return tuple(out)


def apply_factors(arr, op, layout, factors):
    """Apply ``op`` to the given factors of ``arr`` (shape (dim,) or (dim, batch))."""
    factors = normalize_factors(layout, factors)
    by_reg = {f[0]: f for f in factors}
    shape, axis_of = [], {}
    for name, dim in layout:
        if name in by_reg:
            _, l, m, r = by_reg[name]
            shape += [l, m, r]
            axis_of[name] = len(shape) - 2
        else:
            shape.append(dim)
    extra = arr.shape[1:]
    op_dim = math.prod(f[2] for f in factors)
    if op.shape != (op_dim, op_dim):
        raise DimMismatch(f"operator of shape {op.shape} does not match targets of dim {op_dim}")
    t = arr.reshape(shape + list(extra))
    axes = [axis_of[f[0]] for f in factors]
    t = np.moveaxis(t, axes, range(len(axes)))
    moved = t.shape
    t = (op @ t.reshape(op_dim, -1)).reshape(moved)
    t = np.moveaxis(t, range(len(axes)), axes)
    return t.reshape(arr.shape)


def lift(op, layout, factors):
    """Full-space matrix of ``op`` acting on ``factors`` and identity elsewhere."""
    d = layout_dim(layout)
    return apply_factors(np.eye(d, dtype=complex), op, layout, factors)
