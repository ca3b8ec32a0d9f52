"""Independent brute-force evaluation of f({A_j}) with plain dense algebra.

Used by tests and by ``verify``; the compiler never calls into this module.
"""

from __future__ import annotations

import numpy as np

from .. import dsl
from ..errors import DomainViolation
from ..functions import lookup


def hermitian_function(a, spec, tol=1e-9):
    """h(A) = sum_l h(l) |u_l><u_l| for Hermitian A."""
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if np.max(np.abs(a - a.conj().T), initial=0.0) > tol * scale:
        raise DomainViolation(f"{spec.name} needs a Hermitian argument")
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    spec.check_interval(float(w[0]), float(w[-1]))
    return (v * spec(w)) @ v.conj().T


def oracle_eval(node, registry, functions=None):
    kind = node.kind
    if kind == dsl.LEAF:
        return registry.matrix(node.name).copy()
    vals = [oracle_eval(c, registry, functions) for c in node.children]
    if kind == dsl.ADD:
        return vals[0] + vals[1]
    if kind == dsl.MULT:
        return vals[0] @ vals[1]
    if kind == dsl.TENSOR:
        return np.kron(vals[0], vals[1])
    if kind == dsl.KSUM:
        n1, n2 = vals[0].shape[0], vals[1].shape[0]
        return np.kron(vals[0], np.eye(n2)) + np.kron(np.eye(n1), vals[1])
    if kind == dsl.HAD:
        return vals[0] * vals[1]
    if kind == dsl.FUNC:
        return hermitian_function(vals[0], lookup(node.name, functions))
    if kind == dsl.ADJ:
        return vals[0].conj().T
    if kind == dsl.IMUL:
        return 1j * vals[0]
    raise ValueError(f"unknown node kind {kind!r}")
