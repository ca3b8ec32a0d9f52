"""Scalar outputs: inner products, quadratic forms and spectral sums.

Every stochastic step draws from ``rng_for(seed, stream...)`` so a fixed
seed reproduces results bit for bit.  Spectral estimators sample the
eigenvalues of X_3(f) from the maximally mixed state restricted to index
blocks 0 and 2 (ancillas in |0>); the middle block only contributes
zeros and is excluded by construction.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import dsl
from .compiler import Analyzer, CompilerConfig, compile, execute
from .compiler.analysis import NodeInfo
from .densesim.kernels import layout_dim
from .densesim.qpe import CIRCUIT_LIMIT, PhaseEstimator, check_precision, controlled_rotation_and_postselect
from .densesim.qpe import outcome_phase, phase_estimate
from .densesim.state import MIXED, PURE, QuantumState, apply, measure, pure_state, rng_for
from .densesim.oracle import oracle_eval
from .embedding import embed_matrix, embed_vector
from .errors import (
    DimMismatch,
    InvalidP,
    NotPositiveDefinite,
    PostselectionStarved,
    PrecisionOverflow,
    ShiftTooSmall,
    ZeroVector,
)

IDEAL = "ideal"
CIRCUIT = "circuit"
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def _jsonable(v):
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(np.real(v)), "im": float(np.imag(v))}
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class EstimationResult:
    kind: str
    value: complex | float
    samples_used: int
    std_error: float
    confidence: float | None = None
    bound: float | None = None
    breakdown: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.std_error < 0 or self.samples_used < 1:
            raise ValueError("std_error must be >= 0 and samples_used >= 1")

    def to_json(self):
        return _jsonable(
            {
                "kind": self.kind,
                "value": self.value,
                "std_error": self.std_error,
                "samples": self.samples_used,
                "confidence": self.confidence,
                "bound": self.bound,
                "breakdown": self.breakdown,
                "config": self.config,
                "seed": self.seed,
            }
        )


# ---------------------------------------------------------------- inner products
def _unit(v, what):
    v = np.asarray(v, dtype=complex).ravel()
    nrm = np.linalg.norm(v)
    if v.size == 0 or nrm == 0:
        raise ZeroVector(f"{what} must be a nonzero vector")
    return v / nrm, float(nrm)


def hadamard_test_state(x, y, imaginary=False):
    """(|0>|x> + phase |1>|y>)/sqrt2 followed by H on the first qubit."""
    phase = -1j if imaginary else 1.0
    vec = np.concatenate([x, phase * y]) / math.sqrt(2.0)
    state = pure_state(vec, (("hq", 2), ("sys", x.size)))
    return apply(state, _HADAMARD, ["hq"])


def estimate_inner_product(x, y, m, seed=0, stream=()):
    """<x|y> of the normalized vectors from two m-shot Hadamard tests.

    P(0) = (1 + Re<x|y>)/2 for the plain test and (1 + Im<x|y>)/2 for the
    variant with -i on the |1> branch.
    """
    x, _ = _unit(x, "x")
    y, _ = _unit(y, "y")
    if x.size != y.size:
        raise DimMismatch(f"vectors of length {x.size} and {y.size}")
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    parts, errs, probs = [], [], []
    for k, imaginary in enumerate((False, True)):
        state = hadamard_test_state(x, y, imaginary)
        counts = measure(state, "hq", m, rng_for(seed, *stream, k))
        p_hat = counts.get(0, 0) / m
        parts.append(2.0 * p_hat - 1.0)
        errs.append(2.0 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / m))
        probs.append(p_hat)
    value = complex(parts[0], parts[1])
    return EstimationResult(
        "inner_product",
        value,
        m,
        float(math.hypot(*errs)),
        breakdown={"re": parts[0], "im": parts[1], "re_std": errs[0], "im_std": errs[1],
                   "p0_re": probs[0], "p0_im": probs[1]},
        config={"shots": m},
        seed=seed,
    )


# --------------------------------------------------------------- quadratic forms
def qpe_time(norm_bound):
    """Default phase-estimation time: the spectrum maps into [-pi/2, pi/2]."""
    return math.pi / (2.0 * max(norm_bound, 1e-300))


def qpe_phase_variance(bits, grid=65):
    """Worst-case mean squared phase error of textbook QPE with ``bits`` qubits.

    Maximized over the offset of the true phase from the outcome grid; the
    distance is taken around the circle.
    """
    big_m = 2**bits
    k = np.arange(big_m)
    worst = 0.0
    for delta in np.linspace(0.0, 1.0, grid):
        phi = 2.0 * math.pi * delta / big_m
        diff = phi - 2.0 * math.pi * k / big_m
        amp = np.exp(1j * np.outer(np.arange(big_m), diff)).sum(axis=0) / big_m
        p = np.abs(amp) ** 2
        d = (diff + math.pi) % (2.0 * math.pi) - math.pi
        worst = max(worst, float(np.sum(p * d**2)))
    return worst


def quadratic_form_program(node, registry, qpe_bits=6, eps=1e-4, functions=None, config=None):
    """Controlled program for e^{i X_3(f) t_pe} with the default t_pe."""
    bound = Analyzer(registry if not _has_had(node) else _had_registry(node, registry), functions).norm(node)
    t_pe = qpe_time(bound)
    return compile(node, registry, t_pe, eps, functions=functions, config=config, controlled=True), bound


def _has_had(node):
    return any(n.kind == dsl.HAD for _, n in dsl.nodes(node))


def _had_registry(node, registry):
    from .embedding import selector_matrix

    extra = {}
    for _, n in dsl.nodes(node):
        if n.kind == dsl.HAD:
            s = selector_matrix(n.dim)
            extra[f"_S{n.dim}"] = s
            extra[f"_Sdag{n.dim}"] = s.conj().T
    return registry.extended(extra)


def estimate_quadratic_form(x, y, program, m, qpe_bits, seed=0, c=None, norm_bound=None,
                            floor=1e-3, functions=None):
    """Estimate x^dag f y through phase estimation, rotation and postselection.

    ``program`` must be a controlled program for e^{i X_3(f) t_pe}.
    The result scales the Hadamard-test overlap <V_1(x)|out> by
    |x||y| sqrt(p)/c, where p is the postselection probability estimated
    from m shots.
    """
    if not program.controlled:
        raise ValueError("the quadratic-form pipeline needs a controlled program")
    xu, xn = _unit(x, "x")
    yu, yn = _unit(y, "y")
    n = program.node.dim
    if xu.size != n or yu.size != n:
        raise DimMismatch(f"vectors must have length {n}")
    t_pe = program.t
    if norm_bound is None:
        norm_bound = Analyzer(program.registry, functions or program.functions).norm(program.node)
    c = t_pe / math.pi if c is None else float(c)
    layout = tuple(program.layout[1:])
    anc = layout_dim([r for r in layout if r[0] in program.ancillas])
    if layout_dim(layout) * 2**qpe_bits > CIRCUIT_LIMIT:
        raise PrecisionOverflow(f"joint dimension {layout_dim(layout) * 2**qpe_bits} exceeds {CIRCUIT_LIMIT}")

    e0 = np.zeros(anc)
    e0[0] = 1.0
    v2 = np.kron(embed_vector(yu, 2).vector, e0)
    v1 = np.kron(embed_vector(xu, 1).vector, e0)
    state = pure_state(v2, layout)

    cu = execute(program, functions=functions)
    qpe = PhaseEstimator(cu, qpe_bits, t_pe, norm_bound)
    joint = qpe.coherent(state)
    out, p_exact = controlled_rotation_and_postselect(joint, c, t_pe, uncompute=qpe.uncompute)

    rng = rng_for(seed, 0)
    hits = int(rng.binomial(int(m), p_exact))
    p_hat = hits / int(m)
    if hits == 0 or p_hat < floor:
        raise PostselectionStarved(f"postselection succeeded {hits}/{m} times (floor {floor})")

    ref = np.zeros(out.data.size, dtype=complex)
    ref[: v1.size] = v1  # phase register |0> is the most significant factor
    ip = estimate_inner_product(ref, out.data, m, seed, stream=(1,))
    scale = xn * yn / c
    value = scale * math.sqrt(p_hat) * ip.value

    # Probability predicted from the exact spectrum, and the QPE systematic.
    f_op = embed_matrix(oracle_eval(program.node, program.registry, functions or program.functions))
    w, v = np.linalg.eigh(f_op)
    gamma = v.conj().T @ embed_vector(yu, 2).vector
    p_ideal = float(np.sum(np.abs(gamma) ** 2 * (c * w) ** 2))
    p_sys = c**2 * qpe_phase_variance(qpe_bits) / t_pe**2
    p_stat = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / m)
    p_std = math.hypot(p_stat, p_sys)

    rel_p = 0.5 * p_stat / max(p_hat, 1e-300)
    std = abs(scale) * math.sqrt(p_hat) * math.hypot(ip.std_error, abs(ip.value) * rel_p)
    return EstimationResult(
        "quadratic_form",
        complex(value),
        int(m),
        float(std),
        breakdown={
            "success_probability": p_hat,
            "success_probability_std": p_std,
            "success_probability_stat_std": p_stat,
            "success_probability_exact": p_exact,
            "success_probability_ideal": p_ideal,
            "qpe_systematic": p_sys,
            "overlap": ip.value,
            "c": c,
            "t_pe": t_pe,
        },
        config={"shots": int(m), "qpe_bits": int(qpe_bits), "floor": floor},
        seed=seed,
    )


# ------------------------------------------------------------ eigenvalue sampling
class SpectrumSampler:
    """Draws eigenvalue estimates of X_3(f) from the restricted maximally mixed state.

    ``ideal``: eigenpairs of the compiled unitary, eigenvalue times (1 + eps_sigma g).
    ``circuit``: textbook QPE with ``qpe_bits`` qubits on the controlled program.
    """

    def __init__(self, node, registry, mode=IDEAL, qpe_bits=8, eps_sigma=0.0, functions=None,
                 compile_eps=1e-4, config=None):
        if mode not in (IDEAL, CIRCUIT):
            raise ValueError(f"mode must be {IDEAL!r} or {CIRCUIT!r}")
        self.node = node
        self.mode = mode
        self.qpe_bits = int(qpe_bits)
        self.eps_sigma = float(eps_sigma)
        reg = _had_registry(node, registry) if _has_had(node) else registry
        self.info = Analyzer(reg, functions)(node)
        bound = max(self.info.norm, 1e-300)
        if mode == IDEAL:
            self.t = 1.0 / bound
            self.program = compile(node, registry, self.t, compile_eps, functions=functions, config=config)
            u = execute(self.program)
            tri, z = scipy.linalg.schur(u, output="complex")
            self.eigenvalues = np.angle(np.diag(tri)) / self.t
            mask = _logical_mask(self.program)
            w = (np.abs(z) ** 2 * mask[:, None]).sum(axis=0)
            self.weights = w / w.sum()
        else:
            self.t = qpe_time(bound)
            self.program = compile(node, registry, self.t, compile_eps, functions=functions, config=config,
                                   controlled=True)
            layout = tuple(self.program.layout[1:])
            if layout_dim(layout) * 2**self.qpe_bits > CIRCUIT_LIMIT:
                raise PrecisionOverflow(
                    f"circuit QPE needs dimension {layout_dim(layout) * 2**self.qpe_bits} > {CIRCUIT_LIMIT}; "
                    "use the ideal sampler"
                )
            check_precision(bound, self.t, self.qpe_bits)
            self.cu = execute(self.program)
            self.qpe = PhaseEstimator(self.cu, self.qpe_bits, self.t, bound)
            mask = _logical_mask(self.program)
            dist = np.zeros(2**self.qpe_bits)
            for b in np.flatnonzero(mask):
                vec = np.zeros(layout_dim(layout), dtype=complex)
                vec[b] = 1.0
                dist += self.qpe.outcome_distribution(QuantumState(PURE, layout, vec))
            self.weights = dist / dist.sum()
            self.eigenvalues = outcome_phase(np.arange(2**self.qpe_bits), self.qpe_bits) / self.t

    @property
    def logical_dim(self):
        return 2 * self.node.dim

    def draw(self, count, rng):
        idx = rng.choice(self.eigenvalues.size, size=int(count), p=self.weights)
        lam = self.eigenvalues[idx]
        if self.mode == IDEAL and self.eps_sigma > 0:
            lam = lam * (1.0 + self.eps_sigma * rng.standard_normal(lam.size))
        return lam

    def mixed_state(self):
        layout = tuple(self.program.layout[1:]) if self.program.controlled else tuple(self.program.layout)
        mask = _logical_mask(self.program)
        return QuantumState(MIXED, layout, np.diag(mask / mask.sum()).astype(complex))


def _logical_mask(program):
    layout = [(n, d) for n, d in program.layout if n != "ctl"]
    grids = np.indices([d for _, d in layout]).reshape(len(layout), -1)
    keep = np.ones(grids.shape[1], dtype=bool)
    for k, (name, _) in enumerate(layout):
        if name == "idx":
            keep &= grids[k] != 1
        elif name in program.ancillas:
            keep &= grids[k] == 0
    return keep.astype(float)


def sample_eigenvalue(program, qpe_bits, t_pe=None, seed=0, norm_bound=None):
    """One circuit-level QPE draw from the restricted maximally mixed state."""
    if not program.controlled:
        raise ValueError("phase estimation needs a controlled program")
    t_pe = program.t if t_pe is None else t_pe
    layout = tuple(program.layout[1:])
    mask = _logical_mask(program)
    state = QuantumState(MIXED, layout, np.diag(mask / mask.sum()).astype(complex))
    sample, _ = phase_estimate(execute(program), state, qpe_bits, t_pe, seed=rng_for(seed, 0),
                               norm_bound=norm_bound)
    return sample


_SAMPLERS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _sampler(node, registry, mode, qpe_bits, eps_sigma, functions, compile_eps, shift=None):
    per_reg = _SAMPLERS.setdefault(registry, {})
    fkey = None if functions is None else tuple(sorted(functions))
    key = (node, mode, qpe_bits, eps_sigma, fkey, compile_eps, shift)
    if key not in per_reg:
        target, reg = node, registry
        if shift is not None:
            reg = registry.extended({"_shift": shift * np.eye(node.dim)})
            target = dsl.binary(dsl.ADD, node, dsl.leaf("_shift", node.dim), node.dim)
        per_reg[key] = SpectrumSampler(target, reg, mode, qpe_bits, eps_sigma, functions, compile_eps)
    return per_reg[key]


def sample_count(k_const, eps, eps_sigma, confidence, c_const=1.0):
    """T = ceil(C K^2 (1 + eps_sigma^2) / (eps^2 a))."""
    return max(1, math.ceil(c_const * k_const**2 * (1.0 + eps_sigma**2) / (eps**2 * confidence)))


def _split_target(eps, eps_sigma, rel_target):
    if eps is None and eps_sigma is None:
        return rel_target / 2.0, rel_target / 2.0
    if eps is None:
        return rel_target - eps_sigma, eps_sigma
    if eps_sigma is None:
        return eps, rel_target - eps
    return eps, eps_sigma


def estimate_schatten_p(node, registry, p, T=None, *, eps=None, eps_sigma=None, rel_target=0.2,
                        confidence=0.01, c_const=1.0, sigma_band=(0.5, 1.0), mode=IDEAL, qpe_bits=8,
                        seed=0, functions=None, compile_eps=1e-4):
    """||f||_p from T eigenvalue samples: Y = (N/T) sum |l_j|^p, result Y^(1/p)."""
    if not (isinstance(p, (int, float)) and math.isfinite(p) and p > 0):
        raise InvalidP(f"p must be a positive finite real, got {p!r}")
    eps, eps_sigma = _split_target(eps, eps_sigma, rel_target)
    sampler = _sampler(node, registry, mode, qpe_bits, eps_sigma if mode == IDEAL else 0.0, functions, compile_eps)
    s_max = max(sampler.info.norm, 1e-300)
    k_p = p * (s_max ** (p - 1) if p >= 1 else sigma_band[0] ** (p - 1))
    auto = T is None
    T = sample_count(k_p, eps, eps_sigma, confidence, c_const) if auto else int(T)
    lam = np.abs(sampler.draw(T, rng_for(seed, 0)))
    n = node.dim
    xs = lam**p
    y = n * float(xs.mean())
    value = y ** (1.0 / p)
    y_std = n * float(xs.std(ddof=1)) / math.sqrt(T) if T > 1 else 0.0
    std = y_std * value / (p * y) if y > 0 else 0.0
    mean_abs = float(lam.mean())
    kappa = (k_p * mean_abs / max(float(xs.mean()), 1e-300)) ** (1.0 / p)
    bound_rel = eps ** (1.0 / p) + kappa * eps_sigma ** (1.0 / p)
    outside = float(np.mean((lam < sigma_band[0]) | (lam > sigma_band[1])))
    return EstimationResult(
        "schatten",
        value,
        T,
        std,
        confidence,
        bound=bound_rel * value,
        breakdown={"Y": y, "K_p": k_p, "kappa_p": kappa, "relative_bound": bound_rel,
                   "eps": eps, "eps_sigma": eps_sigma, "outside_band_fraction": outside,
                   "auto_T": auto},
        config={"p": p, "T": T, "mode": mode, "qpe_bits": qpe_bits, "C": c_const,
                "sigma_band": list(sigma_band)},
        seed=seed,
    )


def _static_info(node, registry, functions):
    reg = _had_registry(node, registry) if _has_had(node) else registry
    return Analyzer(reg, functions)(node)


def auto_shift(node, registry, functions=None):
    """1.1 x a spectral-radius upper bound: Frobenius norm for leaves, static bound otherwise.

    A zero operator still gets a positive shift (1.0) so |l'| - c is well defined.
    """
    if node.kind == dsl.LEAF:
        r = float(np.linalg.norm(registry.matrix(node.name)))
    else:
        r = _static_info(node, registry, functions).norm
    return 1.1 * r if r > 1e-12 else 1.0


def _hermitian_trace(node, registry, shift, T, eps, eps_lambda, confidence, c_const, mode, qpe_bits,
                     seed, stream, functions, compile_eps):
    info: NodeInfo = _static_info(node, registry, functions)
    c = auto_shift(node, registry, functions) if shift is None else float(shift)
    if info.hermitian and c + info.lo <= 0:
        raise ShiftTooSmall(f"shift {c:.6g} does not make the spectrum (>= {info.lo:.6g}) positive")
    sampler = _sampler(node, registry, mode, qpe_bits, eps_lambda if mode == IDEAL else 0.0, functions,
                       compile_eps, shift=c)
    auto = T is None
    T = sample_count(1.0, eps, eps_lambda, confidence, c_const) if auto else int(T)
    shifted = np.abs(sampler.draw(T, rng_for(seed, *stream)))
    lam = shifted - c
    n = node.dim
    value = n * float(lam.mean())
    std = n * float(lam.std(ddof=1)) / math.sqrt(T) if T > 1 else 0.0
    tr_shifted = n * float(shifted.mean())
    return value, std, T, tr_shifted, c, auto


def estimate_trace(node, registry, shift=None, T=None, *, eps=None, eps_lambda=None, rel_target=0.2,
                   confidence=0.01, c_const=1.0, mode=IDEAL, qpe_bits=8, seed=0, functions=None,
                   compile_eps=1e-4):
    """Tr f by sampling |l'| - c over A' = f + cI.

    Non-Hermitian f is split into the Hermitian pieces f + f^dag and
    i(f^dag - f), whose traces are 2 Re Tr f and 2 Im Tr f.
    """
    eps, eps_lambda = _split_target(eps, eps_lambda, rel_target)
    info = _static_info(node, registry, functions)
    common = dict(T=T, eps=eps, eps_lambda=eps_lambda, confidence=confidence, c_const=c_const, mode=mode,
                  qpe_bits=qpe_bits, functions=functions, compile_eps=compile_eps)
    config = {"T": T, "mode": mode, "qpe_bits": qpe_bits, "C": c_const, "eps": eps, "eps_lambda": eps_lambda}
    if info.hermitian:
        value, std, T_used, tr_shifted, c, auto = _hermitian_trace(node, registry, shift, seed=seed, stream=(0,),
                                                                   **common)
        bound = (eps + eps_lambda) * tr_shifted
        return EstimationResult(
            "trace", value, T_used, std, confidence, bound=bound,
            breakdown={"shift": c, "shifted_trace": tr_shifted, "auto_T": auto},
            config={**config, "T": T_used}, seed=seed,
        )
    d = node.dim
    adj = dsl.ExprNode(dsl.ADJ, (node,), dim=d)
    re_node = dsl.binary(dsl.ADD, node, adj, d)
    i_adj = dsl.ExprNode(dsl.IMUL, (adj,), dim=d)
    minus_i = dsl.ExprNode(dsl.IMUL, (dsl.ExprNode(dsl.IMUL, (dsl.ExprNode(dsl.IMUL, (node,), dim=d),), dim=d),), dim=d)
    im_node = dsl.binary(dsl.ADD, i_adj, minus_i, d)
    re_v, re_s, T1, re_tr, re_c, auto = _hermitian_trace(re_node, registry, shift, seed=seed, stream=(0,), **common)
    im_v, im_s, T2, im_tr, im_c, _ = _hermitian_trace(im_node, registry, shift, seed=seed, stream=(1,), **common)
    value = complex(0.5 * re_v, 0.5 * im_v)
    bound = 0.5 * (eps + eps_lambda) * math.hypot(re_tr, im_tr)
    return EstimationResult(
        "trace", value, T1 + T2, 0.5 * math.hypot(re_s, im_s), confidence, bound=bound,
        breakdown={"re": 0.5 * re_v, "im": 0.5 * im_v, "re_shift": re_c, "im_shift": im_c,
                   "re_shifted_trace": re_tr, "im_shifted_trace": im_tr, "auto_T": auto},
        config={**config, "T": T1 + T2}, seed=seed,
    )


def estimate_determinant(node, registry, T=None, *, eps=None, eps_lambda=None, rel_target=0.2,
                         confidence=0.01, c_const=1.0, mode=IDEAL, qpe_bits=8, seed=0, functions=None,
                         compile_eps=1e-4):
    """det f = exp(Tr log f) for Hermitian positive definite f."""
    info = _static_info(node, registry, functions)
    if not info.hermitian or info.lo <= 0:
        raise NotPositiveDefinite(f"{dsl.to_text(node)} is not known to be Hermitian positive definite")
    log_node = dsl.func("log", node, node.dim)
    tr = estimate_trace(log_node, registry, T=T, eps=eps, eps_lambda=eps_lambda, rel_target=rel_target,
                        confidence=confidence, c_const=c_const, mode=mode, qpe_bits=qpe_bits, seed=seed,
                        functions=functions, compile_eps=compile_eps)
    log_det = float(np.real(tr.value))
    value = math.exp(log_det)
    k_e = math.exp(log_det + tr.bound)
    return EstimationResult(
        "determinant", value, tr.samples_used, value * tr.std_error, confidence,
        bound=k_e * tr.bound,
        breakdown={"log_det": log_det, "log_det_bound": tr.bound, "K_e": k_e, **tr.breakdown},
        config=tr.config, seed=seed,
    )
