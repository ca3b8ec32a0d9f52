"""Prefix-call expression language for matrix functions.

Grammar (whitespace-insensitive)::

    expr  := IDENT
           | ("add" | "mult" | "tensor" | "ksum" | "had") "(" expr "," expr ")"
           | "fn:" FNAME "(" expr ")"
    IDENT := [A-Za-z_][A-Za-z0-9_]*
    FNAME := [A-Za-z_][A-Za-z0-9_-]*

Nodes are immutable and carry the side length ``dim`` of the square matrix
they represent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .errors import DimensionMismatch, ExprSyntaxError, UnknownMatrix
from .functions import lookup

LEAF = "leaf"
ADD = "add"
MULT = "mult"
KSUM = "ksum"
TENSOR = "tensor"
HAD = "had"
FUNC = "fn"
# internal only: produced by estimators, never by the parser
ADJ = "adj"
IMUL = "imul"
# internal only: one part of a function split, name "FN|odd" or "FN|ratio"
FNPART = "fnpart"

BINARY = (ADD, MULT, TENSOR, KSUM, HAD)
UNARY = (FUNC, ADJ, IMUL, FNPART)


@dataclass(frozen=True)
class ExprNode:
    kind: str
    children: tuple = ()
    name: str | None = None
    dim: int = 0

    @property
    def left(self):
        return self.children[0]

    @property
    def right(self):
        return self.children[1]

    @property
    def child(self):
        return self.children[0]

    @property
    def depth(self):
        if not self.children:
            return 0
        return 1 + max(c.depth for c in self.children)

    def leaves(self):
        if self.kind == LEAF:
            yield self.name
        for c in self.children:
            yield from c.leaves()

    def __str__(self):
        return to_text(self)


def leaf(name, dim=0):
    return ExprNode(LEAF, name=name, dim=dim)


def binary(kind, left, right, dim=0):
    return ExprNode(kind, (left, right), dim=dim)


def func(fn_name, child, dim=0):
    return ExprNode(FUNC, (child,), name=fn_name, dim=dim)


_TOKEN = re.compile(
    r"\s*(?:(?P<fn>fn:(?P<fname>[A-Za-z_][A-Za-z0-9_-]*))"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[(),]))"
)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def _peek(self):
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos:]
            if rest.strip() == "":
                return None, None, len(self.text)
            start = self.pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {self.text[start]!r}", start)
        kind = "fn" if m.group("fn") else "ident" if m.group("ident") else "punct"
        return m, kind, m.start(kind)

    def _expect(self, punct):
        m, kind, where = self._peek()
        if m is None or kind != "punct" or m.group("punct") != punct:
            got = "end of input" if m is None else repr(m.group(kind))
            raise ExprSyntaxError(f"expected {punct!r}, got {got}", where)
        self.pos = m.end()

    def expr(self):
        m, kind, where = self._peek()
        if m is None:
            raise ExprSyntaxError("unexpected end of input", where)
        if kind == "punct":
            raise ExprSyntaxError(f"unexpected {m.group('punct')!r}", where)
        self.pos = m.end()
        if m.group("fn"):
            fname = m.group("fname")
            self._expect("(")
            child = self.expr()
            self._expect(")")
            return func(fname, child)
        ident = m.group("ident")
        nxt, nkind, _ = self._peek()
        if nxt is not None and nkind == "punct" and nxt.group("punct") == "(":
            if ident not in BINARY:
                raise ExprSyntaxError(f"unknown operation {ident!r}", where)
            self._expect("(")
            left = self.expr()
            self._expect(",")
            right = self.expr()
            self._expect(")")
            return binary(ident, left, right)
        return leaf(ident)

    def parse(self):
        node = self.expr()
        m, _, where = self._peek()
        if m is not None:
            raise ExprSyntaxError("trailing input", where)
        return node


def parse_raw(text):
    """Parse without resolving names or dimensions."""
    return _Parser(text).parse()


def parse(text, registry, functions=None):
    """Parse ``text`` into a dimension-annotated tree.

    Leaf names are resolved against ``registry`` and function names against
    ``functions`` (defaults to the built-in function table).
    """
    return infer_dims(parse_raw(text), registry, functions)


def infer_dims(node, registry, functions=None, _path=""):
    """Return a copy of ``node`` with every ``dim`` filled in; idempotent."""
    here = _path or node.kind
    if node.kind == LEAF:
        if node.name not in registry:
            raise UnknownMatrix(f"unknown matrix {node.name!r}")
        return replace(node, dim=registry.dim(node.name))
    kids = tuple(
        infer_dims(c, registry, functions, f"{here}/{i}:{c.kind}") for i, c in enumerate(node.children)
    )
    if node.kind == FUNC:
        lookup(node.name, functions)
        return replace(node, children=kids, dim=kids[0].dim)
    if node.kind in (ADJ, IMUL, FNPART):
        return replace(node, children=kids, dim=kids[0].dim)
    l, r = kids
    if node.kind in (ADD, MULT, HAD):
        if l.dim != r.dim:
            raise DimensionMismatch(here, r.dim, l.dim)
        dim = l.dim
    elif node.kind in (TENSOR, KSUM):
        dim = l.dim * r.dim
    else:
        raise ValueError(f"unknown node kind {node.kind!r}")
    return replace(node, children=kids, dim=dim)


def to_text(node):
    if node.kind == LEAF:
        return node.name
    if node.kind == FUNC:
        return f"fn:{node.name}({to_text(node.child)})"
    if node.kind in (ADJ, IMUL):
        return f"{node.kind}({to_text(node.child)})"
    if node.kind == FNPART:
        return f"fnpart:{node.name}({to_text(node.child)})"
    return f"{node.kind}({to_text(node.left)},{to_text(node.right)})"


def to_json(node):
    out = {"kind": node.kind, "dim": node.dim}
    if node.name is not None:
        out["name"] = node.name
    if node.children:
        out["children"] = [to_json(c) for c in node.children]
    return out


def from_json(data):
    kids = tuple(from_json(c) for c in data.get("children", ()))
    return ExprNode(data["kind"], kids, data.get("name"), data.get("dim", 0))


def nodes(node, path="root"):
    """Pre-order walk yielding (path, node)."""
    yield path, node
    for i, c in enumerate(node.children):
        yield from nodes(c, f"{path}/{i}")
