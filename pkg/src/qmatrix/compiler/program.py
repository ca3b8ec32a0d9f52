"""Step IR for compiled programs.

Steps are listed in application order: in ``Seq((a, b))`` the operator
``a`` acts first, so the represented matrix is ``b @ a``.  ``Repeat`` and
``Inverse`` keep products of many identical blocks compact; the flattened
primitive sequence is available through :func:`iter_primitives`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import dsl

IDX = "idx"
DATA = "data"
CTL = "ctl"
IDX_FACTOR = (IDX, 1, 3, 1)


@dataclass(frozen=True, eq=False)
class QueryExp:
    """e^{sign i X_slot(A_name) tau} on the index register and data factors."""

    name: str
    slot: int
    sign: int
    tau: float
    controlled: bool
    targets: tuple


@dataclass(frozen=True, eq=False)
class Fixed:
    """A fixed index-register gate: P1, P2, P3 or U1, possibly daggered."""

    gate: str
    dagger: bool
    controlled: bool


@dataclass(frozen=True, eq=False)
class AncillaInit:
    register: str


@dataclass(frozen=True, eq=False)
class Seq:
    steps: tuple
    label: str = ""


@dataclass(frozen=True, eq=False)
class Repeat:
    body: object
    count: int


@dataclass(frozen=True, eq=False)
class Inverse:
    body: object


@dataclass(frozen=True, eq=False)
class SpectralTransform:
    """Sum_l e^{i g(l) t} |u_l><u_l| over the eigenpairs of the body e^{i H tau}.

    ``part`` selects g from the named function: "odd" is the odd part,
    "ratio" the even part divided by l.  ``ancillas`` lists the ancilla
    registers the body expects in |0>.
    """

    function: str
    part: str
    t: float
    tau: float
    body: object
    controlled: bool
    ancillas: tuple = ()


@dataclass
class BudgetEntry:
    path: str
    kind: str
    t: float
    eps: float
    eps_node: float
    eps_children: float
    reps: int = 1
    step_count: float = 1.0
    calls_per_child: int = 0


@dataclass
class CompiledProgram:
    node: dsl.ExprNode
    registry: object
    t: float
    eps: float
    controlled: bool
    layout: tuple
    root: object
    ancillas: tuple
    budget: list = field(default_factory=list)
    config: object = None
    functions: dict | None = None

    @property
    def dim(self):
        return self.node.dim

    def query_counts(self):
        return query_counts(self.root)

    @property
    def query_count(self):
        return sum(self.query_counts().values())

    def primitives(self):
        return iter_primitives(self.root)

    def to_json(self):
        return program_to_json(self)


def query_counts(step, _memo=None):
    memo = {} if _memo is None else _memo
    key = id(step)
    if key in memo:
        return memo[key]
    if isinstance(step, QueryExp):
        out = {step.name: 1}
    elif isinstance(step, (Fixed, AncillaInit)):
        out = {}
    elif isinstance(step, Seq):
        out = {}
        for s in step.steps:
            for k, v in query_counts(s, memo).items():
                out[k] = out.get(k, 0) + v
    elif isinstance(step, Repeat):
        out = {k: v * step.count for k, v in query_counts(step.body, memo).items()}
    elif isinstance(step, (Inverse, SpectralTransform)):
        out = dict(query_counts(step.body, memo))
    else:
        raise TypeError(f"unknown step {step!r}")
    memo[key] = out
    return out


def iter_primitives(step, inverse=False):
    """Yield (primitive, inverted) pairs in application order."""
    if isinstance(step, (QueryExp, Fixed, AncillaInit, SpectralTransform)):
        yield step, inverse
    elif isinstance(step, Seq):
        seq = reversed(step.steps) if inverse else step.steps
        for s in seq:
            yield from iter_primitives(s, inverse)
    elif isinstance(step, Repeat):
        for _ in range(step.count):
            yield from iter_primitives(step.body, inverse)
    elif isinstance(step, Inverse):
        yield from iter_primitives(step.body, not inverse)
    else:
        raise TypeError(f"unknown step {step!r}")


def _step_json(step, table, ids):
    """Serialize ``step`` into ``table`` once and return its reference."""
    key = id(step)
    if key in ids:
        return ids[key]
    if isinstance(step, QueryExp):
        d = {
            "kind": "query_exp",
            "name": step.name,
            "slot": step.slot,
            "sign": step.sign,
            "tau": step.tau,
            "controlled": step.controlled,
            "targets": [list(f) for f in step.targets],
        }
    elif isinstance(step, Fixed):
        d = {"kind": "fixed", "gate": step.gate, "dagger": step.dagger, "controlled": step.controlled}
    elif isinstance(step, AncillaInit):
        d = {"kind": "ancilla_init", "register": step.register}
    elif isinstance(step, Seq):
        d = {"kind": "seq", "label": step.label, "steps": [_step_json(s, table, ids) for s in step.steps]}
    elif isinstance(step, Repeat):
        d = {"kind": "repeat", "count": step.count, "body": _step_json(step.body, table, ids)}
    elif isinstance(step, Inverse):
        d = {"kind": "inverse", "body": _step_json(step.body, table, ids)}
    elif isinstance(step, SpectralTransform):
        d = {
            "kind": "spectral_transform",
            "function": step.function,
            "part": step.part,
            "t": step.t,
            "tau": step.tau,
            "controlled": step.controlled,
            "ancillas": list(step.ancillas),
            "body": _step_json(step.body, table, ids),
        }
    else:
        raise TypeError(f"unknown step {step!r}")
    ref = len(table)
    table.append(d)
    ids[key] = ref
    return ref


def program_to_json(program):
    table, ids = [], {}
    root = _step_json(program.root, table, ids)
    return {
        "expression": dsl.to_text(program.node),
        "tree": dsl.to_json(program.node),
        "t": program.t,
        "eps": program.eps,
        "controlled": program.controlled,
        "layout": [[n, d] for n, d in program.layout],
        "ancillas": list(program.ancillas),
        "steps": table,
        "root": root,
        "budget": [vars(b) for b in program.budget],
        "query_counts": program.query_counts(),
    }


def steps_from_json(data):
    """Rebuild the step graph of a serialized program; returns the root step."""
    table = data["steps"]
    built = {}

    def build(ref):
        if ref in built:
            return built[ref]
        d = table[ref]
        kind = d["kind"]
        if kind == "query_exp":
            s = QueryExp(d["name"], d["slot"], d["sign"], d["tau"], d["controlled"],
                         tuple(tuple(f) for f in d["targets"]))
        elif kind == "fixed":
            s = Fixed(d["gate"], d["dagger"], d["controlled"])
        elif kind == "ancilla_init":
            s = AncillaInit(d["register"])
        elif kind == "seq":
            s = Seq(tuple(build(r) for r in d["steps"]), d.get("label", ""))
        elif kind == "repeat":
            s = Repeat(build(d["body"]), d["count"])
        elif kind == "inverse":
            s = Inverse(build(d["body"]))
        elif kind == "spectral_transform":
            s = SpectralTransform(d["function"], d["part"], d["t"], d["tau"], build(d["body"]),
                                  d["controlled"], tuple(d["ancillas"]))
        else:
            raise ValueError(f"unknown step kind {kind!r}")
        built[ref] = s
        return s

    return build(data["root"])
