"""Acceptance checks 1-10, each printing one PASS/FAIL line with its metric."""

import io
import json
import math
import time

import numpy as np
import pytest

from qmatrix import parse
from qmatrix.cli import run
from qmatrix.compiler import compile, deviation
from qmatrix.densesim import MatrixRegistry, matrix_to_json
from qmatrix.embedding import (
    embed_matrix,
    embed_vector,
    permutation,
    phase_unitary_u1,
    selector_matrix,
)
from qmatrix.estimators import (
    estimate_determinant,
    estimate_inner_product,
    estimate_quadratic_form,
    estimate_schatten_p,
    estimate_trace,
    quadratic_form_program,
)
from qmatrix.functions import DEFAULT_FUNCTIONS

from conftest import NESTED, nested_registry, h_functions, rand_complex, rand_hermitian


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def test_criterion_01_embedding_identities(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        a = rand_complex(rng, n, 1.0)
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        y = rng.normal(size=n) + 1j * rng.normal(size=n)
        lhs = embed_vector(x, 1).vector.conj() @ embed_matrix(a) @ embed_vector(y, 2).vector
        worst = max(worst, abs(lhs - x.conj() @ a @ y))
        for i in (1, 2, 3):
            p = permutation(i, n)
            diff = p @ embed_matrix(a, i) @ p.conj().T - embed_matrix(a, i % 3 + 1)
            worst = max(worst, float(np.max(np.abs(diff))))
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-10 and elapsed < 5, f"max residual {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_multiplication_algebra(report):
    rng = np.random.default_rng(202)
    worst = 0.0
    u1 = phase_unitary_u1(2)
    for _ in range(100):
        a1, a2 = rand_complex(rng, 2, 1.0), rand_complex(rng, 2, 1.0)
        x1, x2 = embed_matrix(a1, 1), embed_matrix(a2, 2)
        comm = 1j * (x1 @ x2 - x2 @ x1)
        worst = max(worst, float(np.max(np.abs(comm - embed_matrix(1j * a1 @ a2)))))
        m = a1 @ a2
        conj = u1 @ embed_matrix(1j * m) @ u1.conj().T
        worst = max(worst, float(np.max(np.abs(conj - embed_matrix(m)))))
    report(2, worst <= 1e-10, f"max residual {worst:.2e}")


def _slope(reg, expr, reps):
    node = parse(expr, reg)
    xs, errs = [], []
    for r in reps:
        program = compile(node, reg, 1.0, 0.1, reps=r)
        root = next(b for b in program.budget if b.path == "root")
        xs.append(root.step_count)
        errs.append(deviation(program))
    return float(np.polyfit(np.log(xs), np.log(errs), 1)[0])


def test_criterion_03_trotter_scaling(report):
    rng = np.random.default_rng(303)
    start = time.perf_counter()
    add, mult = [], []
    for _ in range(20):
        reg = MatrixRegistry({"A1": rand_complex(rng, 2), "A2": rand_complex(rng, 2)})
        add.append(_slope(reg, "add(A1,A2)", [8, 16, 32, 64, 128]))
        mult.append(_slope(reg, "mult(A1,A2)", [8, 32, 128, 512, 2048]))
    elapsed = time.perf_counter() - start
    ok_add = all(abs(s + 1.0) <= 0.2 for s in add)
    ok_mult = all(abs(s + 2.0) <= 0.3 for s in mult)
    report(
        3,
        ok_add and ok_mult and elapsed < 120,
        f"add slopes [{min(add):.3f}, {max(add):.3f}], mult slopes [{min(mult):.3f}, {max(mult):.3f}], {elapsed:.1f}s",
    )


def test_criterion_04_nested_compile_contract(report):
    fns = h_functions()
    start = time.perf_counter()
    devs = []
    for seed in range(20):
        reg = nested_registry(seed)
        program = compile(parse(NESTED, reg, fns), reg, 0.2, 0.05, functions=fns)
        devs.append(deviation(program))
    elapsed = time.perf_counter() - start
    rate = float(np.mean(np.array(devs) <= 0.05))
    report(4, rate >= 0.95 and elapsed < 300, f"{rate:.0%} within 0.05 (max dev {max(devs):.2e}), {elapsed:.1f}s")


def test_criterion_05_hadamard_tensor_kronecker(report):
    rng = np.random.default_rng(505)
    worst_s = worst_k = 0.0
    reps_ok = True
    for _ in range(20):
        a, b = rand_complex(rng, 3), rand_complex(rng, 3)
        s = selector_matrix(3)
        e00 = np.zeros((3, 3))
        e00[0, 0] = 1
        worst_s = max(worst_s, float(np.max(np.abs(s @ np.kron(a, b) @ s.conj().T - np.kron(a * b, e00)))))
        reg = MatrixRegistry({"H": rand_hermitian(rng, 2), "G": rand_hermitian(rng, 2)})
        program = compile(parse("ksum(H,G)", reg), reg, 1.0, 1e-8)
        root = next(b for b in program.budget if b.path == "root")
        reps_ok &= root.reps == 1
        worst_k = max(worst_k, deviation(program))
    ok = worst_s == 0.0 and worst_k <= 1e-8 and reps_ok
    report(5, ok, f"selector residual {worst_s:.1e}, Kronecker-sum deviation {worst_k:.2e} with n=1")


def test_criterion_06_function_identities(report):
    rng = np.random.default_rng(606)
    worst_odd = 0.0
    for name in ("cube", "sin"):
        spec = DEFAULT_FUNCTIONS[name]
        for _ in range(10):
            a = rand_hermitian(rng, 3, 1.0)
            w, v = np.linalg.eigh(a)
            ha = (v * spec(w)) @ v.conj().T
            x = embed_matrix(a)
            wx, vx = np.linalg.eigh(x)
            hx = (vx * spec(wx)) @ vx.conj().T
            worst_odd = max(worst_odd, float(np.max(np.abs(embed_matrix(ha) - hx))))
    worst_even = 0.0
    for name in ("square", "cos"):
        for k in range(5):
            h = rand_hermitian(rng, 3, 1.0)
            h = h + (0.2 - np.linalg.eigvalsh(h).min()) * np.eye(3) if name == "cos" else h
            reg = MatrixRegistry({"A": h})
            program = compile(parse(f"fn:{name}(A)", reg), reg, 0.5, 0.01)
            worst_even = max(worst_even, deviation(program) / 0.01)
    ok = worst_odd <= 1e-10 and worst_even <= 1.0
    report(6, ok, f"odd residual {worst_odd:.2e}, even deviation/eps {worst_even:.2e}")


def test_criterion_07_inner_product_statistics(report):
    rng = np.random.default_rng(707)
    m = 10_000
    tol = 3 / math.sqrt(m)
    hits = 0
    for trial in range(1000):
        x = rng.normal(size=3) + 1j * rng.normal(size=3)
        y = rng.normal(size=3) + 1j * rng.normal(size=3)
        exact = np.vdot(x / np.linalg.norm(x), y / np.linalg.norm(y))
        res = estimate_inner_product(x, y, m, seed=trial)
        hits += abs(res.value.real - exact.real) <= tol and abs(res.value.imag - exact.imag) <= tol
    rate = hits / 1000
    report(7, rate >= 0.99, f"{rate:.1%} of 1000 trials within 3/sqrt(m) on both parts")


def _sigma_band_matrix(rng, n, lo, hi, hermitian=False):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    s = rng.uniform(lo, hi, size=n)
    if hermitian:
        return (q * s) @ q.conj().T
    p, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return (q * s) @ p.conj().T


def test_criterion_08_sampling_envelopes(report):
    rng = np.random.default_rng(808)
    start = time.perf_counter()
    trials = 200
    rates = {}
    a = _sigma_band_matrix(rng, 4, 0.5, 1.0)
    reg = MatrixRegistry({"A": a})
    node = parse("A", reg)
    s = np.linalg.svd(a, compute_uv=False)
    for p in (1, 2, 3):
        exact = float(np.sum(s**p) ** (1 / p))
        bad = 0
        for k in range(trials):
            res = estimate_schatten_p(node, reg, p, seed=k)
            bad += abs(res.value - exact) / exact > res.breakdown["relative_bound"]
        rates[f"schatten p={p}"] = bad / trials
    h = rand_hermitian(rng, 4, 1.0)
    reg_h = MatrixRegistry({"H": h})
    node_h = parse("H", reg_h)
    bad = 0
    for k in range(trials):
        res = estimate_trace(node_h, reg_h, seed=k)
        bad += abs(res.value - np.trace(h).real) > res.bound
    rates["trace"] = bad / trials
    violations_ok = all(r <= 0.02 for r in rates.values())

    good = 0
    for k in range(trials):
        spd = _sigma_band_matrix(rng, 3, 0.2, 0.9, hermitian=True)
        reg_d = MatrixRegistry({"P": spd})
        res = estimate_determinant(parse("P", reg_d), reg_d, seed=k)
        good += abs(res.value - np.linalg.det(spd).real) <= res.bound
    det_rate = good / trials
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{k} violations {v:.1%}" for k, v in rates.items())
    report(8, violations_ok and det_rate >= 0.98 and elapsed < 600,
           f"{detail}, determinant within bound {det_rate:.1%}, {elapsed:.1f}s")


def test_criterion_09_quadratic_form_pipeline(report):
    reg = MatrixRegistry({"A": np.diag([2.0, 3.0])})
    program, bound = quadratic_form_program(parse("A", reg), reg, qpe_bits=6)
    details, ok = [], True
    for x, y, exact in (([1.0, 0.0], [1.0, 0.0], 2.0), ([1.0, 1.0], [1.0, 1.0], 5.0)):
        res = estimate_quadratic_form(np.array(x), np.array(y), program, 10_000, 6, seed=9, norm_bound=bound)
        rel = abs(res.value - exact) / exact
        b = res.breakdown
        z = abs(b["success_probability"] - b["success_probability_ideal"]) / b["success_probability_std"]
        z_stat = abs(b["success_probability"] - b["success_probability_ideal"]) / b["success_probability_stat_std"]
        ok &= rel <= 0.05 and z <= 3
        details.append(f"x^T A y={exact:g}: rel err {rel:.2%}, p={b['success_probability']:.4f} "
                       f"vs {b['success_probability_ideal']:.4f} ({z:.2f} sigma, {z_stat:.2f} sigma shot noise only)")
    report(9, ok, "; ".join(details))


def test_criterion_10_cli_reproducibility(report, tmp_path):
    rng = np.random.default_rng(1010)
    files = []
    for name, a in {"A": rand_complex(rng, 2), "B": rand_complex(rng, 2), "D": np.diag([2.0, 3.0]),
                    "S": np.diag([0.5, 0.7])}.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(matrix_to_json(name, a)))
        files += ["-m", str(path)]
    commands = [
        ["compile", "-e", "mult(A,B)", *files, "-t", "0.5"],
        ["verify", "-e", "add(A,B)", *files, "-t", "0.5"],
        ["expect", "-e", "D", *files, "-x", "1,0", "-y", "1,1"],
        ["trace", "-e", "A", *files],
        ["schatten", "-e", "A", *files, "-p", "3"],
        ["det", "-e", "S", *files],
        ["innerprod", "-x", "1,1j", "-y", "0.6,0.8"],
    ]
    same = 0
    for argv in commands:
        blobs = []
        for k in range(2):
            out = tmp_path / f"out{k}.json"
            code = run(argv + ["--seed", "42", "-o", str(out)], stdout=io.StringIO(), stderr=io.StringIO())
            blobs.append((code, out.read_bytes()))
        same += blobs[0] == blobs[1] and blobs[0][0] == 0
    report(10, same == len(commands), f"{same}/{len(commands)} commands byte-identical")
