import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qmatrix.densesim import (
    Backend,
    MatrixRegistry,
    PhaseEstimator,
    apply,
    basis_state,
    controlled,
    controlled_rotation_and_postselect,
    expm_hermitian,
    lift,
    load_matrix_file,
    matrix_to_json,
    maximally_mixed,
    measure,
    oracle_eval,
    parse_matrix_json,
    phase_estimate,
    prepare_state,
    pure_state,
    rng_for,
)
from qmatrix.densesim.qpe import outcome_phase
from qmatrix import parse
from qmatrix.embedding import embed_matrix
from qmatrix.errors import (
    DimMismatch,
    DomainViolation,
    NonUnitary,
    NotHermitian,
    PrecisionOverflow,
    RotationOverflow,
    UnknownMatrix,
    ZeroVector,
)

from conftest import rand_complex, rand_hermitian


def test_registry_metadata_and_padding():
    reg = MatrixRegistry({"H": np.diag([1.0, -2.0]), "R": np.ones((2, 3))})
    h = reg.entry("H")
    assert h.hermitian and h.spectrum == (-2.0, 1.0)
    assert math.isclose(h.spectral_norm, 2.0)
    r = reg.entry("R")
    assert r.dim == 3 and r.original_shape == (2, 3)
    assert r.mask.sum() == 6
    with pytest.raises(UnknownMatrix):
        reg.entry("missing")


def test_matrix_json_round_trip(tmp_path, rng):
    a = rand_complex(rng, 3)
    path = tmp_path / "a.json"
    path.write_text(json.dumps(matrix_to_json("A", a)))
    name, b = load_matrix_file(path)
    assert name == "A" and np.array_equal(a, b)
    with pytest.raises(DimMismatch):
        parse_matrix_json({"name": "A", "rows": 2, "cols": 2, "entries": [[[1, 0]]]})


@pytest.mark.parametrize("slot", [1, 2, 3])
@pytest.mark.parametrize("sign", [1, -1])
def test_query_exp_matches_matrix_exponential(rng, slot, sign):
    a = rand_complex(rng, 2)
    reg = MatrixRegistry({"A": a})
    backend = Backend(reg)
    u = backend.query_exp("A", slot, sign, 0.37)
    assert np.allclose(u, expm(sign * 0.37j * embed_matrix(a, slot)), atol=1e-12)
    cu = backend.query_exp("A", slot, sign, 0.37, controlled_=True)
    assert np.allclose(cu[:6, :6], np.eye(6)) and np.allclose(cu[6:, 6:], u)
    assert backend.queries["A"] == 2


def test_expm_hermitian_rejects_non_hermitian(rng):
    with pytest.raises(NotHermitian):
        expm_hermitian(rand_complex(rng, 2), 1.0)


def test_lift_orders_registers_most_significant_first():
    layout = (("a", 2), ("b", 3))
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    assert np.allclose(lift(x, layout, ["a"]), np.kron(x, np.eye(3)))
    z = np.diag([1, 2, 3]).astype(complex)
    assert np.allclose(lift(z, layout, ["b"]), np.kron(np.eye(2), z))


def test_states_and_measurement():
    s = prepare_state([1.0, 1j], 2)
    assert np.isclose(s.norm(), 1.0)
    assert np.allclose(s.data[4:], np.array([1, 1j]) / np.sqrt(2))
    with pytest.raises(ZeroVector):
        prepare_state([0, 0], 1)
    mm = maximally_mixed(4)
    assert np.allclose(mm.probabilities("sys"), 0.25)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    plus = apply(basis_state((("q", 2),)), h, ["q"])
    counts = measure(plus, "q", 10_000, rng_for(3, 0))
    assert sum(counts.values()) == 10_000
    assert abs(counts[0] / 10_000 - 0.5) < 0.02
    assert measure(plus, "q", 100, rng_for(3, 0)) == measure(plus, "q", 100, rng_for(3, 0))
    with pytest.raises(NonUnitary):
        apply(plus, np.ones((2, 2)), ["q"])


def test_condition_renormalizes():
    s = pure_state([1, 1, 1, 1], (("a", 2), ("b", 2)))
    post, p = s.condition("a", 1)
    assert math.isclose(p, 0.5)
    assert np.allclose(post.data, [0, 0, 1 / np.sqrt(2), 1 / np.sqrt(2)])


def _cu(h, t):
    return controlled(expm_hermitian(h, t))


def test_qpe_exact_on_grid_phase():
    m = 4
    t = 2 * math.pi * 3 / 2**m  # eigenvalue 1 lands on k=3
    h = np.diag([1.0, -1.0])
    state = basis_state((("sys", 2),), 0)
    sample, post = phase_estimate(_cu(h, t), state, m, t, seed=0, norm_bound=1.0)
    assert math.isclose(sample.eigenvalue_estimate, 1.0)
    s2, _ = phase_estimate(_cu(h, t), basis_state((("sys", 2),), 1), m, t, seed=0, norm_bound=1.0)
    assert math.isclose(s2.eigenvalue_estimate, -1.0)


def test_qpe_precision_overflow():
    with pytest.raises(PrecisionOverflow):
        PhaseEstimator(_cu(np.eye(2), 4.0), 4, 4.0, norm_bound=1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10))
def test_outcome_phases_wrap_into_half_open_interval(m):
    k = np.arange(2**m)
    phi = outcome_phase(k, m)
    assert np.all(phi > -math.pi) and np.all(phi <= math.pi)


def test_rotation_success_probability_and_overflow():
    m = 5
    t = 2 * math.pi * 4 / 2**m  # eigenvalues +-0.5 are on grid
    h = np.diag([0.5, -0.5])
    qpe = PhaseEstimator(_cu(h, t), m, t, norm_bound=0.5)
    state = pure_state([0.6, 0.8], (("sys", 2),))
    joint = qpe.coherent(state)
    c = 1.0
    _, p = controlled_rotation_and_postselect(joint, c, t, uncompute=qpe.uncompute)
    assert math.isclose(p, 0.25, rel_tol=1e-9)
    with pytest.raises(RotationOverflow):
        controlled_rotation_and_postselect(joint, 3.0, t)


def test_oracle_matches_hand_computation(rng):
    a, b, h = rand_complex(rng, 2), rand_complex(rng, 2), rand_hermitian(rng, 2)
    reg = MatrixRegistry({"A": a, "B": b, "H": h})
    node = parse("add(mult(A,B),had(A,fn:cube(H)))", reg)
    assert np.allclose(oracle_eval(node, reg), a @ b + a * (h @ h @ h))
    with pytest.raises(DomainViolation):
        oracle_eval(parse("fn:sin(A)", reg), reg)
