import dataclasses

import numpy as np
import pytest

from qmatrix import parse
from qmatrix.compiler import (
    CompilerConfig,
    EqualSplit,
    apply_program,
    compile,
    deviation,
    execute,
    iter_primitives,
    leakage,
    split_segments,
    steps_from_json,
)
from qmatrix.compiler.execute import unitary_power
from qmatrix.densesim import MatrixRegistry, pure_state
from qmatrix.densesim.kernels import is_unitary
from qmatrix.errors import BudgetInfeasible, DomainViolation

from conftest import NESTED, nested_registry, h_functions, rand_complex, rand_hermitian

EPS = 0.05


@pytest.fixture(scope="module")
def reg():
    rng = np.random.default_rng(7)
    h = rand_hermitian(rng, 2)
    return MatrixRegistry(
        {
            "A": rand_complex(rng, 2),
            "B": rand_complex(rng, 2),
            "H": h,
            "G": rand_hermitian(rng, 2),
            "P": h @ h + 0.3 * np.eye(2),
        }
    )


@pytest.mark.parametrize(
    "expr",
    [
        "A",
        "add(A,B)",
        "mult(A,B)",
        "tensor(A,B)",
        "ksum(A,B)",
        "had(A,B)",
        "fn:cube(H)",
        "fn:square(H)",
        "fn:cos(P)",
        "fn:log(P)",
        "fn:shifted-exp(H)",
        "mult(fn:sin(H),A)",
        "add(fn:cube(H),mult(A,B))",
    ],
)
@pytest.mark.parametrize("t", [0.2, -0.5])
def test_deviation_within_budget(reg, expr, t):
    program = compile(parse(expr, reg), reg, t, EPS)
    assert deviation(program) <= EPS


def test_nested_expression_compiles_within_budget():
    reg = nested_registry(3)
    fns = h_functions()
    program = compile(parse(NESTED, reg, fns), reg, 0.2, 0.05, functions=fns)
    u = execute(program)
    assert is_unitary(u, 1e-8)
    assert deviation(program, u) <= 0.05
    assert leakage(program, u) <= 0.05
    assert program.query_counts()["A1"] > 0


def test_budget_tree_respects_split(reg):
    program = compile(parse("add(mult(A,B),H)", reg), reg, 1.0, 0.01)
    root = next(b for b in program.budget if b.path == "root")
    assert root.eps == 0.01
    assert root.eps_node + root.eps_children <= root.eps * (1 + 1e-12)
    for b in program.budget:
        assert b.eps_node <= b.eps


def test_query_count_of_add_is_n_per_leaf(reg):
    program = compile(parse("add(A,B)", reg), reg, 0.3, 0.01)
    root = next(b for b in program.budget if b.path == "root")
    assert program.query_counts() == {"A": root.reps, "B": root.reps}


def test_commuting_terms_need_one_step(reg):
    program = compile(parse("ksum(H,G)", reg), reg, 1.0, 1e-6)
    root = next(b for b in program.budget if b.path == "root")
    assert root.reps == 1
    assert deviation(program) < 1e-8


def test_controlled_program_blocks(reg):
    node = parse("mult(A,B)", reg)
    pc = compile(node, reg, 0.4, 0.01, controlled=True)
    pu = compile(node, reg, 0.4, 0.01)
    uc, uu = execute(pc), execute(pu)
    d = uu.shape[0]
    assert np.allclose(uc[:d, :d], np.eye(d), atol=1e-10)
    assert np.allclose(uc[d:, d:], uu, atol=1e-8)
    assert np.allclose(uc[:d, d:], 0)
    assert deviation(pc, uc) <= 0.01


def test_zero_time_is_identity(reg):
    program = compile(parse("add(A,B)", reg), reg, 0.0, 0.01)
    assert np.allclose(execute(program), np.eye(6))


def test_program_json_round_trip(reg):
    program = compile(parse("had(A,add(B,H))", reg), reg, 0.3, 0.05)
    data = program.to_json()
    rebuilt = dataclasses.replace(program, root=steps_from_json(data))
    assert np.allclose(execute(rebuilt), execute(program))
    assert data["query_counts"] == program.query_counts()


def test_state_application_matches_operator(reg):
    program = compile(parse("mult(A,add(B,H))", reg), reg, 0.3, 0.05)
    rng = np.random.default_rng(0)
    v = rng.normal(size=6) + 1j * rng.normal(size=6)
    state = pure_state(v, program.layout)
    out = apply_program(program, state)
    assert np.allclose(out.data, execute(program) @ state.data)


def test_iter_primitives_flattens_small_programs(reg):
    program = compile(parse("add(A,B)", reg), reg, 0.1, 0.05)
    prims = list(iter_primitives(program.root))
    assert len(prims) == sum(program.query_counts().values())


def test_budget_errors(reg):
    with pytest.raises(BudgetInfeasible):
        compile(parse("A", reg), reg, 1.0, 0.0)
    with pytest.raises(BudgetInfeasible):
        compile(parse("mult(A,B)", reg), reg, 1.0, 1e-3, config=CompilerConfig(max_reps=10))


def test_function_domain_errors(reg):
    with pytest.raises(DomainViolation):
        compile(parse("fn:sin(A)", reg), reg, 1.0, 0.1)
    with pytest.raises(DomainViolation):
        compile(parse("fn:log(H)", reg), reg, 1.0, 0.1)
    with pytest.raises(DomainViolation):
        compile(parse("fn:sin(mult(A,B))", reg), reg, 1.0, 0.1)


def test_policy_is_pluggable(reg):
    cfg = CompilerConfig(policy=EqualSplit(node_share=0.8))
    program = compile(parse("add(A,B)", reg), reg, 1.0, 0.05, config=cfg)
    root = next(b for b in program.budget if b.path == "root")
    assert np.isclose(root.eps_node, 0.04)
    assert deviation(program) <= 0.05


def test_split_segments():
    left, right = split_segments((("data", 1, 6, 1),), 2)
    assert left == (("data", 1, 2, 3),) and right == (("data", 2, 3, 1),)


def test_unitary_power_is_stable_for_huge_counts():
    theta = 1e-9
    u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], dtype=complex)
    p = unitary_power(u, 10**9)
    assert is_unitary(p, 1e-10)
    assert np.allclose(p, [[np.cos(1.0), -np.sin(1.0)], [np.sin(1.0), np.cos(1.0)]], atol=1e-6)
