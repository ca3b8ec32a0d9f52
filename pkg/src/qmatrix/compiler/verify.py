"""Compare executed programs with the dense reference e^{i X_3(f) t}."""

from __future__ import annotations

import numpy as np

from ..densesim.kernels import expm_hermitian, layout_dim
from ..densesim.oracle import oracle_eval
from ..embedding import embed_matrix
from .execute import execute


def logical_block(program, u):
    """Restrict ``u`` to ancillas in |0> (and control |1> when controlled) on idx (x) data."""
    base = 3 * program.node.dim
    anc = layout_dim([r for r in program.layout if r[0] in program.ancillas])
    sel = np.arange(base) * anc
    if program.controlled:
        sel = sel + base * anc
    return u[np.ix_(sel, sel)]


def reference_unitary(program, functions=None):
    f = oracle_eval(program.node, program.registry, functions if functions is not None else program.functions)
    return expm_hermitian(embed_matrix(f), program.t)


def deviation(program, u=None, functions=None):
    """Spectral-norm distance between the program's logical block and the reference."""
    u = execute(program) if u is None else u
    diff = logical_block(program, u) - reference_unitary(program, functions)
    return float(np.linalg.norm(diff, 2))


def leakage(program, u=None):
    """Norm of the amplitude leaving the ancilla |0> sector from inside it."""
    u = execute(program) if u is None else u
    base = 3 * program.node.dim
    anc = layout_dim([r for r in program.layout if r[0] in program.ancillas])
    sel = np.arange(base) * anc
    if program.controlled:
        sel = sel + base * anc
    rest = np.setdiff1d(np.arange(u.shape[0]), sel)
    return float(np.linalg.norm(u[np.ix_(rest, sel)], 2)) if rest.size else 0.0
