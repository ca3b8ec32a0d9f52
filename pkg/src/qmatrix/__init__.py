"""Compile composed matrix functions into embedded-Hamiltonian programs and estimate scalar outputs."""

from . import compiler, dsl, embedding, estimators, functions
from .densesim import MatrixRegistry
from .dsl import parse
from .errors import QmatError

__version__ = "0.1.0"

__all__ = [
    "MatrixRegistry",
    "QmatError",
    "compiler",
    "dsl",
    "embedding",
    "estimators",
    "functions",
    "parse",
    "__version__",
]
