"""Static facts about expression nodes used to size repetitions.

Everything here is derived from registry metadata (norms, Hermiticity,
leaf spectra) and structural rules; the composite matrix f({A_j}) is never
formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import dsl
from ..embedding import embed_matrix
from ..errors import DomainViolation
from ..functions import lookup

# point sets larger than this fall back to interval enclosures
_MAX_POINTS = 4096


@dataclass(frozen=True)
class NodeInfo:
    """Spectral-norm bound plus, for Hermitian nodes, a spectrum enclosure.

    ``points`` holds the exact eigenvalues when structural rules determine
    them (leaves, Kronecker sums and tensor products of such), else None.
    """

    norm: float
    hermitian: bool
    lo: float | None = None
    hi: float | None = None
    points: tuple | None = None

    def contains_zero(self, tol=1e-12):
        if self.points is not None:
            return bool(np.min(np.abs(self.points)) <= tol)
        return self.lo <= tol and self.hi >= -tol

    def min_abs(self):
        if self.points is not None:
            return float(np.min(np.abs(self.points)))
        if self.lo > 0:
            return self.lo
        if self.hi < 0:
            return -self.hi
        return 0.0


def _herm(norm, lo, hi, points=None):
    if points is not None:
        pts = np.unique(np.round(np.asarray(points, dtype=float), 14))
        if pts.size > _MAX_POINTS:
            points = None
        else:
            points = tuple(float(x) for x in pts)
            lo, hi = points[0], points[-1]
    norm = min(norm, max(abs(lo), abs(hi)))
    return NodeInfo(norm, True, lo, hi, points)


class Analyzer:
    """Memoized static analysis bound to one registry and function table."""

    def __init__(self, registry, functions=None):
        self.registry = registry
        self.functions = functions
        self._memo = {}

    def __call__(self, node) -> NodeInfo:
        if node not in self._memo:
            self._memo[node] = self._info(node)
        return self._memo[node]

    def norm(self, node):
        return self(node).norm

    def _info(self, node):
        k = node.kind
        if k == dsl.LEAF:
            e = self.registry.entry(node.name)
            if e.hermitian:
                return _herm(e.spectral_norm, e.spectrum[0], e.spectrum[1], e.eigenvalues)
            return NodeInfo(e.spectral_norm, False)
        if k in (dsl.FUNC, dsl.FNPART):
            return self._func_info(node)
        if k == dsl.ADJ:
            return self(node.child)
        if k == dsl.IMUL:
            return NodeInfo(self(node.child).norm, False)
        a, b = self(node.left), self(node.right)
        both = a.hermitian and b.hermitian
        if k == dsl.ADD:
            if both:
                return _herm(a.norm + b.norm, a.lo + b.lo, a.hi + b.hi)
            return NodeInfo(a.norm + b.norm, False)
        if k == dsl.KSUM:
            if both:
                pts = None
                if a.points is not None and b.points is not None:
                    pts = np.add.outer(a.points, b.points).ravel()
                return _herm(a.norm + b.norm, a.lo + b.lo, a.hi + b.hi, pts)
            return NodeInfo(a.norm + b.norm, False)
        if k == dsl.TENSOR:
            if both:
                ends = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi]
                pts = None
                if a.points is not None and b.points is not None:
                    pts = np.multiply.outer(a.points, b.points).ravel()
                return _herm(a.norm * b.norm, min(ends), max(ends), pts)
            return NodeInfo(a.norm * b.norm, False)
        if k == dsl.HAD:
            s = a.norm * b.norm
            return _herm(s, -s, s) if both else NodeInfo(s, False)
        if k == dsl.MULT:
            base = function_base(node)
            if base is not None and self(base).hermitian:
                return self._even_info(node, base)
            return NodeInfo(a.norm * b.norm, False)
        raise ValueError(f"unknown node kind {k!r}")

    def _func_info(self, node):
        child = self(node.child)
        if not child.hermitian:
            raise DomainViolation(
                f"fn:{node.name} needs a Hermitian argument; {dsl.to_text(node.child)} is not known to be Hermitian"
            )
        if node.kind == dsl.FUNC:
            spec = lookup(node.name, self.functions)
            spec.check_interval(child.lo, child.hi)
            fn = spec
        else:
            fname, part = node.name.split("|")
            spec = lookup(fname, self.functions)
            fn = spec.part(part)
            if part == "ratio" and spec.ratio_at_zero is None and child.contains_zero():
                raise DomainViolation(
                    f"{fname}: even part over lambda is undefined at 0 and the argument spectrum may contain 0"
                )
        if child.points is not None:
            vals = np.asarray(fn(np.asarray(child.points)), dtype=float)
            return _herm(float(np.max(np.abs(vals))), float(vals.min()), float(vals.max()), vals)
        lo, hi = _image(fn, child.lo, child.hi)
        return _herm(max(abs(lo), abs(hi)), lo, hi)

    def _even_info(self, node, base):
        """Info for (even/l)(A) * A, a Hermitian function of A."""
        ratio = self(node.left)
        child = self(base)
        fname = node.left.name.split("|")[0]
        spec = lookup(fname, self.functions)
        if child.points is not None:
            vals = spec.ratio(np.asarray(child.points)) * np.asarray(child.points)
            vals = np.where(np.isfinite(vals), vals, 0.0)
            return _herm(float(np.max(np.abs(vals))), float(vals.min()), float(vals.max()), vals)
        s = ratio.norm * child.norm
        return _herm(s, -s, s)

    def commute(self, a, b):
        """True when X_3(a) and X_3(b) are known to commute."""
        fa, fb = function_base(a), function_base(b)
        if fa is not None and fa == fb and self(a).hermitian and self(b).hermitian:
            return True
        if a.kind == dsl.LEAF and b.kind == dsl.LEAF:
            xa = embed_matrix(self.registry.matrix(a.name))
            xb = embed_matrix(self.registry.matrix(b.name))
            scale = max(1.0, self(a).norm * self(b).norm)
            return bool(np.max(np.abs(xa @ xb - xb @ xa)) <= 1e-12 * scale)
        for s, o in ((a, b), (b, a)):
            if s.kind == dsl.LEAF and self(o).hermitian:
                e = self.registry.entry(s.name)
                if e.is_scaled_identity and abs(e.matrix[0, 0].imag) <= 1e-14:
                    return True
        return False


def function_base(node):
    """The node ``node`` is a spectral function of, for split-function pieces."""
    if node.kind in (dsl.FUNC, dsl.FNPART):
        return node.child
    if node.kind == dsl.MULT and node.left.kind == dsl.FNPART and node.left.child == node.right:
        return node.right
    return None


def _image(fn, lo, hi, points=801):
    grid = np.linspace(lo, hi, points)
    vals = np.asarray(fn(grid), dtype=float)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise DomainViolation(f"function undefined on [{lo:.6g}, {hi:.6g}]")
    pad = 0.01 * (float(vals.max() - vals.min()) + 1e-12)
    return float(vals.min()) - pad, float(vals.max()) + pad


def part_lipschitz(fn, info, points=401):
    """Lipschitz estimate of ``fn`` near the spectrum described by ``info``."""
    if info.points is not None:
        pts = np.asarray(info.points)
        gap = max(float(np.min(np.abs(pts))), 1e-6)
        width = 0.25 * gap
        grids = [np.linspace(p - width, p + width, 41) for p in pts]
    else:
        grids = [np.linspace(info.lo, info.hi, points)]
    best = 0.0
    for g in grids:
        v = np.asarray(fn(g), dtype=float)
        ok = np.isfinite(v)
        if ok.sum() < 2:
            continue
        slopes = np.abs(np.diff(v[ok])) / np.diff(g[ok])
        best = max(best, float(np.max(slopes)))
    return 1.05 * best + 1e-12
