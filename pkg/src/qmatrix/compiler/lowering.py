"""Recursive lowering of expression trees to step programs.

Each node receives a time t and an error allowance eps and returns a step
approximating e^{i X_3(f) t} on the index register and the node's data
*segments*.  A segment ``(register, left, mid, right)`` is the ``mid``
factor of a register viewed as left x mid x right; tensor and Kronecker-sum
nodes split their segments between the two operands, and Hadamard nodes add
a fresh ancilla register for the selector construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .. import dsl
from ..embedding import selector_matrix
from ..errors import BudgetInfeasible, DimMismatch
from ..functions import lookup
from .analysis import Analyzer, part_lipschitz
from .program import (
    CTL,
    DATA,
    IDX,
    IDX_FACTOR,
    AncillaInit,
    BudgetEntry,
    CompiledProgram,
    Fixed,
    Inverse,
    QueryExp,
    Repeat,
    Seq,
    SpectralTransform,
)


@dataclass(frozen=True)
class EqualSplit:
    """Node keeps ``node_share`` of its allowance; the children share the rest."""

    node_share: float = 0.5

    def split(self, eps, kind):
        return eps * self.node_share, eps * (1.0 - self.node_share)


@dataclass(frozen=True)
class CompilerConfig:
    c_add: float = 2.0
    c_mult: float = 2.0
    tau_max: float = 1.0
    max_reps: int = 10**12
    policy: object = field(default_factory=EqualSplit)


def split_segments(segs, n1):
    """Split a tuple of segments of total size n1 * n2 into the n1 and n2 parts."""
    left, right, cum = [], [], 1
    for name, l, m, r in segs:
        if cum >= n1:
            right.append((name, l, m, r))
        elif n1 % (cum * m) == 0:
            left.append((name, l, m, r))
            cum *= m
        else:
            a = n1 // cum
            if n1 % cum or m % a:
                raise DimMismatch(f"cannot split segments {segs} at {n1}")
            left.append((name, l, a, (m // a) * r))
            right.append((name, l * a, m // a, r))
            cum *= a
    return tuple(left), tuple(right)


def _fixed_seq(gates, controlled):
    return tuple(Fixed(g, d, controlled) for g, d in gates)


def _ancillas_in(step, seen=None):
    seen = set() if seen is None else seen
    out = []

    def walk(s):
        if id(s) in seen:
            return
        seen.add(id(s))
        if isinstance(s, AncillaInit):
            out.append(s.register)
        for c in getattr(s, "steps", ()):
            walk(c)
        if hasattr(s, "body"):
            walk(s.body)

    walk(step)
    return tuple(dict.fromkeys(out))


class Compiler:
    def __init__(self, registry, functions=None, config=None):
        self.base_registry = registry
        self.functions = functions
        self.config = config or CompilerConfig()

    # ------------------------------------------------------------------ api
    def compile(self, node, t, eps, controlled=False, reps=None):
        """Lower ``node`` to a program for e^{i X_3(f) t} within ``eps``.

        ``reps`` overrides the repetition count (n for additions, n' for
        products) chosen at the root node, for error-scaling sweeps.
        """
        if not eps > 0:
            raise BudgetInfeasible(f"requested error must be positive, got {eps}")
        if node.dim == 0:
            node = dsl.infer_dims(node, self.base_registry, self.functions)
        extra = {}
        for _, sub in dsl.nodes(node):
            if sub.kind == dsl.HAD:
                s = selector_matrix(sub.dim)
                extra[f"_S{sub.dim}"] = s
                extra[f"_Sdag{sub.dim}"] = s.conj().T
        self.registry = self.base_registry.extended(extra) if extra else self.base_registry
        self.an = Analyzer(self.registry, self.functions)
        self.an(node)  # static domain checks up front
        self.controlled = controlled
        self.root_reps = reps
        self.root_node = node
        self.budget = []
        self._memo = {}
        self._anc = {}
        self._anc_dims = []
        segs = ((DATA, 1, node.dim, 1),)
        root = self._lower(node, segs, float(t), float(eps), "root")
        layout = ((IDX, 3), (DATA, node.dim)) + tuple(self._anc_dims)
        if controlled:
            layout = ((CTL, 2),) + layout
        return CompiledProgram(
            node=node,
            registry=self.registry,
            t=float(t),
            eps=float(eps),
            controlled=controlled,
            layout=layout,
            root=root,
            ancillas=tuple(n for n, _ in self._anc_dims),
            budget=self.budget,
            config=self.config,
            functions=self.functions,
        )

    # ------------------------------------------------------------ helpers
    def _record(self, path, kind, t, eps, eps_node, eps_children, reps=1, step_count=1.0, calls=0):
        self.budget.append(BudgetEntry(path, kind, t, eps, eps_node, eps_children, int(reps), float(step_count), int(calls)))

    def _check_reps(self, n, path):
        if n > self.config.max_reps:
            raise BudgetInfeasible(f"{path}: repetition count {n} exceeds cap {self.config.max_reps}")
        return int(n)

    def _reps(self, node, formula):
        if self.root_reps is not None and node is self.root_node:
            return int(self.root_reps)
        return formula

    def _ancilla(self, node, segs):
        key = (node, segs)
        if key not in self._anc:
            name = f"anc{len(self._anc_dims)}"
            self._anc[key] = name
            self._anc_dims.append((name, node.dim))
        return self._anc[key]

    def _leaf(self, name, segs, tau, slot=3):
        if tau == 0:
            return Seq((), "empty")
        k = max(1, math.ceil(abs(tau) * self.registry.max_norm(name) / self.config.tau_max - 1e-12))
        q = QueryExp(name, slot, 1 if tau > 0 else -1, abs(tau) / k, self.controlled, (IDX_FACTOR,) + tuple(segs))
        return q if k == 1 else Repeat(q, k)

    def _slotted(self, node, segs, tau, eps, slot, path):
        """Fragment for e^{i X_slot(f) tau}, conjugating a slot-3 fragment by P gates."""
        if node.kind == dsl.LEAF:
            return self._leaf(node.name, segs, tau, slot)
        frag = self._lower(node, segs, tau, eps, path)
        c = self.controlled
        if slot == 3:
            return frag
        if slot == 2:
            return Seq(_fixed_seq([("P2", False)], c) + (frag,) + _fixed_seq([("P2", True)], c))
        return Seq(
            _fixed_seq([("P1", False), ("P2", False)], c) + (frag,) + _fixed_seq([("P2", True), ("P1", True)], c)
        )

    # ------------------------------------------------------------ lowering
    def _lower(self, node, segs, t, eps, path):
        if t == 0:
            return Seq((), "empty")
        if t < 0:
            return Inverse(self._lower(node, segs, -t, eps, path))
        key = (node, segs, t, eps)
        if key in self._memo:
            return self._memo[key]
        k = node.kind
        if k == dsl.LEAF:
            self._record(path, k, t, eps, 0.0, 0.0)
            out = self._leaf(node.name, segs, t)
        elif k == dsl.ADD:
            out = self.lower_add(node, (node.left, segs), (node.right, segs), t, eps, path)
        elif k == dsl.KSUM:
            sl, sr = split_segments(segs, node.left.dim)
            out = self.lower_add(node, (node.left, sl), (node.right, sr), t, eps, path)
        elif k == dsl.MULT:
            out = self.lower_mult(node, (node.left, segs), (node.right, segs), t, eps, path)
        elif k == dsl.TENSOR:
            sl, sr = split_segments(segs, node.left.dim)
            out = self.lower_mult(node, (node.left, sl), (node.right, sr), t, eps, path)
        elif k == dsl.HAD:
            out = self.lower_hadamard(node, segs, t, eps, path)
        elif k == dsl.FUNC:
            out = self.lower_func(node, segs, t, eps, path)
        elif k == dsl.FNPART:
            out = self.lower_part(node, segs, t, eps, path)
        elif k == dsl.ADJ:
            c = self.controlled
            frag = self._lower(node.child, segs, t, eps, f"{path}/0")
            self._record(path, k, t, eps, 0.0, eps, calls=1)
            out = Seq(
                _fixed_seq([("P1", True), ("P2", True)], c) + (frag,) + _fixed_seq([("P2", False), ("P1", False)], c),
                "adjoint",
            )
        elif k == dsl.IMUL:
            c = self.controlled
            frag = self._lower(node.child, segs, t, eps, f"{path}/0")
            self._record(path, k, t, eps, 0.0, eps, calls=1)
            out = Seq(_fixed_seq([("U1", False)], c) + (frag,) + _fixed_seq([("U1", True)], c), "times-i")
        else:
            raise ValueError(f"unknown node kind {k!r}")
        self._memo[key] = out
        return out

    def lower_add(self, node, left, right, t, eps, path):
        """First-order product formula (U_l(t/n) U_r(t/n))^n."""
        (l, sl), (r, sr) = left, right
        commuting = (node.kind == dsl.KSUM and self.an(l).hermitian and self.an(r).hermitian) or (
            node.kind == dsl.ADD and self.an.commute(l, r)
        )
        eps_node, eps_kids = self.config.policy.split(eps, node.kind)
        s_l, s_r = self.an.norm(l), self.an.norm(r)
        if commuting:
            n = self._reps(node, 1)
        else:
            n = self._reps(node, max(1, math.ceil(self.config.c_add * t * t * s_l * s_r / eps_node)))
        n = self._check_reps(n, path)
        if commuting and self.root_reps is None:
            eps_node, eps_kids = 0.0, eps
        each = eps_kids / 2.0 / n
        tau = t / n
        fl = self._lower(l, sl, tau, each, f"{path}/0")
        fr = self._lower(r, sr, tau, each, f"{path}/1")
        self._record(path, node.kind, t, eps, eps_node, eps_kids, n, n, n)
        body = Seq((fr, fl), f"{node.kind}-step")
        return body if n == 1 else Repeat(body, n)

    def lower_kronsum(self, node, segs, t, eps, path="root"):
        sl, sr = split_segments(segs, node.left.dim)
        return self.lower_add(node, (node.left, sl), (node.right, sr), t, eps, path)

    def lower_mult(self, node, left, right, t, eps, path):
        """U_1 [l~(i X_1(l) tau, i X_2(r) tau)]^{n'} U_1^dag with tau = t / n, n = sqrt(2 t n')."""
        (l, sl), (r, sr) = left, right
        eps_node, eps_kids = self.config.policy.split(eps, node.kind)
        s_l, s_r = self.an.norm(l), self.an.norm(r)
        k_const = s_l * s_r * (s_l + s_r) ** 2
        n_prime = self._reps(node, max(1, math.ceil(self.config.c_mult * t * t * k_const / eps_node)))
        n_prime = self._check_reps(n_prime, path)
        n = math.sqrt(2.0 * t * n_prime)
        tau = t / n
        # A child fragment and its exact inverse act as e^{+-i(X + E) tau} with
        # ||E|| ~ delta / tau, so the blocks accumulate 2 t s_other delta / tau
        # rather than 4 n' delta.  Each child gets half of eps_kids on that basis.
        each_l = eps_kids * tau / (4.0 * t * max(s_r, 1e-300))
        each_r = eps_kids * tau / (4.0 * t * max(s_l, 1e-300))
        x1p = self._slotted(l, sl, tau, each_l, 1, f"{path}/0")
        x1m = self._slotted(l, sl, -tau, each_l, 1, f"{path}/0")
        x2p = self._slotted(r, sr, tau, each_r, 2, f"{path}/1")
        x2m = self._slotted(r, sr, -tau, each_r, 2, f"{path}/1")
        block = Seq((x2p, x1p, x2m, x1m, x2m, x1m, x2p, x1p), "commutator-block")
        self._record(path, node.kind, t, eps, eps_node, eps_kids, n_prime, n, 4 * n_prime)
        c = self.controlled
        body = block if n_prime == 1 else Repeat(block, n_prime)
        return Seq(_fixed_seq([("U1", True)], c) + (body,) + _fixed_seq([("U1", False)], c), node.kind)

    def lower_tensor(self, node, segs, t, eps, path="root"):
        sl, sr = split_segments(segs, node.left.dim)
        return self.lower_mult(node, (node.left, sl), (node.right, sr), t, eps, path)

    def lower_hadamard(self, node, segs, t, eps, path):
        """S (l (x) r) S^dag on the node's data plus a fresh ancilla, restricted to ancilla |0>."""
        n = node.dim
        anc = self._ancilla(node, segs)
        s_leaf = dsl.leaf(f"_S{n}", n * n)
        sd_leaf = dsl.leaf(f"_Sdag{n}", n * n)
        prod = dsl.binary(dsl.TENSOR, node.left, node.right, n * n)
        inner = dsl.binary(dsl.MULT, s_leaf, dsl.binary(dsl.MULT, prod, sd_leaf, n * n), n * n)
        self._record(path, node.kind, t, eps, 0.0, eps, 1, 1, 1)
        frag = self._lower(inner, tuple(segs) + ((anc, 1, n, 1),), t, eps, f"{path}/sel")
        return Seq((AncillaInit(anc), frag), "hadamard")

    def lower_func(self, node, segs, t, eps, path):
        """Odd part by spectral transform; even part as (even/l)(A) * A; sum by product formula."""
        spec = lookup(node.name, self.functions)
        child = node.child
        if spec.name == "identity":
            self._record(path, node.kind, t, eps, 0.0, eps, 1, 1, 1)
            return self._lower(child, segs, t, eps, f"{path}/0")
        parts = []
        if spec.has_even:
            ratio = dsl.ExprNode(dsl.FNPART, (child,), f"{node.name}|ratio", child.dim)
            parts.append(dsl.binary(dsl.MULT, ratio, child, child.dim))
        if spec.has_odd:
            parts.append(dsl.ExprNode(dsl.FNPART, (child,), f"{node.name}|odd", child.dim))
        self._record(path, node.kind, t, eps, 0.0, eps, 1, 1, 1)
        if not parts:
            return Seq((), "zero-function")
        tree = parts[0] if len(parts) == 1 else dsl.binary(dsl.ADD, parts[0], parts[1], child.dim)
        return self._lower(tree, segs, t, eps, f"{path}/split")

    def lower_part(self, node, segs, t, eps, path):
        fname, part = node.name.split("|")
        spec = lookup(fname, self.functions)
        info = self.an(node.child)
        tau_c = self.config.tau_max / max(info.norm, 1e-12)
        lip = part_lipschitz(spec.part(part), info)
        eps_c = eps / (1.0 + math.pi * lip * t / tau_c)
        body = self._lower(node.child, segs, tau_c, eps_c, f"{path}/0")
        self._record(path, node.kind, t, eps, 0.0, eps, 1, 1, 1)
        return SpectralTransform(fname, part, t, tau_c, body, self.controlled, _ancillas_in(body))


def compile(node, registry, t, eps, functions=None, config=None, controlled=False, reps=None):
    """Compile ``node`` (parsed against ``registry``) for time t and error eps."""
    return Compiler(registry, functions, config).compile(node, t, eps, controlled=controlled, reps=reps)


def gate_matrix(gate, dagger=False):
    """3x3 matrix of a fixed index-register gate."""
    from ..embedding import index_permutation, index_u1

    if gate == "U1":
        m = index_u1()
    elif gate in ("P1", "P2", "P3"):
        m = index_permutation(int(gate[1]))
    else:
        raise ValueError(f"unknown fixed gate {gate!r}")
    return m.conj().T if dagger else m


__all__ = ["Compiler", "CompilerConfig", "EqualSplit", "compile", "gate_matrix", "split_segments"]
