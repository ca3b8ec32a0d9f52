"""Named input matrices with the metadata the compiler needs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..embedding import as_matrix
from ..errors import DimMismatch, UnknownMatrix


@dataclass(frozen=True)
class MatrixEntry:
    name: str
    matrix: np.ndarray
    original_shape: tuple[int, int]
    max_norm: float
    spectral_norm: float
    hermitian: bool
    # eigenvalue range for Hermitian entries, else None
    spectrum: tuple[float, float] | None
    eigenvalues: tuple | None = None

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def mask(self):
        """Boolean mask of the entries that belong to the original matrix."""
        m = np.zeros(self.matrix.shape, dtype=bool)
        m[: self.original_shape[0], : self.original_shape[1]] = True
        return m

    @property
    def is_scaled_identity(self):
        d = self.matrix[0, 0]
        return bool(np.allclose(self.matrix, d * np.eye(self.dim), atol=1e-14))


def _entry(name, a, herm_tol=1e-12):
    a = as_matrix(a)
    rows, cols = a.shape
    n = max(rows, cols)
    padded = np.zeros((n, n), dtype=complex)
    padded[:rows, :cols] = a
    scale = max(1.0, float(np.max(np.abs(padded))))
    hermitian = bool(np.max(np.abs(padded - padded.conj().T)) <= herm_tol * scale)
    spectrum = ev = None
    if hermitian:
        padded = 0.5 * (padded + padded.conj().T)
        ev = np.linalg.eigvalsh(padded)
        spectrum = (float(ev[0]), float(ev[-1]))
    return MatrixEntry(
        name=name,
        matrix=padded,
        original_shape=(rows, cols),
        max_norm=float(np.max(np.abs(padded))),
        spectral_norm=float(np.linalg.norm(padded, 2)),
        hermitian=hermitian,
        spectrum=spectrum,
        eigenvalues=None if ev is None else tuple(float(x) for x in ev),
    )


class MatrixRegistry:
    """Mapping name -> padded square matrix with cached norms.

    Non-square inputs are zero-padded to square on registration; the
    original shape is kept so results can be cut back.
    """

    def __init__(self, matrices=None):
        self._entries: dict[str, MatrixEntry] = {}
        for name, a in (matrices or {}).items():
            self.add(name, a)

    def add(self, name, a):
        if name in self._entries:
            raise ValueError(f"matrix {name!r} already registered")
        self._entries[name] = _entry(name, a)
        return self._entries[name]

    def extended(self, extra):
        """New registry with the same entries plus ``extra`` (name -> matrix)."""
        out = MatrixRegistry()
        out._entries = dict(self._entries)
        for name, a in extra.items():
            if name not in out._entries:
                out.add(name, a)
        return out

    def __contains__(self, name):
        return name in self._entries

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def entry(self, name):
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownMatrix(f"unknown matrix {name!r}") from None

    def matrix(self, name):
        return self.entry(name).matrix

    def dim(self, name):
        return self.entry(name).dim

    def max_norm(self, name):
        return self.entry(name).max_norm

    def embedded_max_norm(self, name):
        """||X_3(A)||_max, which equals ||A||_max."""
        return self.entry(name).max_norm

    @classmethod
    def from_files(cls, paths):
        reg = cls()
        for p in paths:
            name, a = load_matrix_file(p)
            reg.add(name, a)
        return reg


def parse_matrix_json(data):
    """Decode {"name", "rows", "cols", "entries": [[[re, im], ...], ...]}."""
    try:
        name, rows, cols, entries = data["name"], data["rows"], data["cols"], data["entries"]
    except KeyError as exc:
        raise DimMismatch(f"matrix file missing field {exc.args[0]!r}") from None
    if len(entries) != rows or any(len(row) != cols for row in entries):
        raise DimMismatch(f"matrix {name!r}: ragged or wrong-sized entries for {rows}x{cols}")
    a = np.empty((rows, cols), dtype=complex)
    for i, row in enumerate(entries):
        for j, z in enumerate(row):
            if len(z) != 2:
                raise DimMismatch(f"matrix {name!r}: entry ({i},{j}) is not a [re, im] pair")
            a[i, j] = complex(z[0], z[1])
    return name, a


def matrix_to_json(name, a):
    a = np.asarray(a, dtype=complex)
    return {
        "name": name,
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in a],
    }


def load_matrix_file(path):
    with open(Path(path)) as fh:
        return parse_matrix_json(json.load(fh))
