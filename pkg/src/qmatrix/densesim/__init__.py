"""Dense simulation backend and brute-force oracle."""

from .kernels import Backend, apply_factors, controlled, expm_hermitian, is_unitary, lift, query_exp
from .oracle import oracle_eval
from .qpe import EigenSample, PhaseEstimator, controlled_rotation_and_postselect, phase_estimate
from .registry import MatrixRegistry, load_matrix_file, matrix_to_json, parse_matrix_json
from .state import (
    QuantumState,
    apply,
    basis_state,
    maximally_mixed,
    measure,
    prepare_state,
    pure_state,
    rng_for,
    tensor,
)

__all__ = [
    "Backend",
    "EigenSample",
    "MatrixRegistry",
    "PhaseEstimator",
    "QuantumState",
    "apply",
    "apply_factors",
    "basis_state",
    "controlled",
    "controlled_rotation_and_postselect",
    "expm_hermitian",
    "is_unitary",
    "lift",
    "load_matrix_file",
    "matrix_to_json",
    "maximally_mixed",
    "measure",
    "oracle_eval",
    "parse_matrix_json",
    "phase_estimate",
    "prepare_state",
    "pure_state",
    "query_exp",
    "rng_for",
    "tensor",
]
