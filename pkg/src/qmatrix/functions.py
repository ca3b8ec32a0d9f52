"""Real eigenvalue functions h(lambda) usable in ``fn:NAME(x)`` nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainViolation, UnknownFunction

ODD = "odd"
EVEN = "even"
GENERAL = "general"


@dataclass(frozen=True)
class FunctionSpec:
    """A real function applied to the eigenvalues of a Hermitian matrix.

    ``extended`` is the function used when splitting into even and odd parts;
    it must agree with ``eval`` on the domain and be defined on the mirror
    image of it.  ``ratio_at_zero`` is the finite limit of even(l)/l at 0, or
    ``None`` when that limit does not exist.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    parity: str
    domain: tuple[float, float] = (-math.inf, math.inf)
    open_domain: bool = False
    domain_note: str = "all reals"
    extended: Callable[[np.ndarray], np.ndarray] | None = None
    ratio_at_zero: float | None = 0.0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, lam):
        return self.eval(np.asarray(lam, dtype=float))

    def ext(self, lam):
        fn = self.extended or self.eval
        return fn(np.asarray(lam, dtype=float))

    def even_part(self, lam):
        lam = np.asarray(lam, dtype=float)
        return 0.5 * (self.ext(lam) + self.ext(-lam))

    def odd_part(self, lam):
        lam = np.asarray(lam, dtype=float)
        return 0.5 * (self.ext(lam) - self.ext(-lam))

    def ratio(self, lam, zero_tol=1e-9):
        """even(l) / l, using ``ratio_at_zero`` (or nan when undefined) near 0."""
        lam = np.asarray(lam, dtype=float)
        small = np.abs(lam) < zero_tol
        safe = np.where(small, 1.0, lam)
        out = self.even_part(safe) / safe
        fill = np.nan if self.ratio_at_zero is None else self.ratio_at_zero
        return np.where(small, fill, out)

    def part(self, which):
        """Callable for "odd", "ratio" or "full" (the extended function)."""
        if which == "odd":
            return self.odd_part
        if which == "ratio":
            return self.ratio
        if which == "full":
            return self.ext
        raise ValueError(f"unknown function part {which!r}")

    def _part_vanishes(self, which):
        key = f"vanish-{which}"
        if key not in self._cache:
            grid = np.linspace(0.05, 4.0, 97)
            part = self.even_part if which == EVEN else self.odd_part
            self._cache[key] = bool(np.all(np.abs(part(grid)) < 1e-13))
        return self._cache[key]

    @property
    def has_even(self):
        if self.parity == ODD:
            return False
        return not self._part_vanishes(EVEN)

    @property
    def has_odd(self):
        if self.parity == EVEN:
            return False
        return not self._part_vanishes(ODD)

    def check_interval(self, lo, hi):
        """Raise DomainViolation unless [lo, hi] lies inside the domain."""
        a, b = self.domain
        if self.open_domain:
            ok = lo > a and hi < b
        else:
            ok = lo >= a and hi <= b
        if not ok:
            raise DomainViolation(
                f"spectrum [{lo:.6g}, {hi:.6g}] outside domain of {self.name} ({self.domain_note})"
            )

    def lipschitz(self, lo, hi, part=None, points=401):
        """Finite-difference Lipschitz estimate of ``part`` on [lo, hi]."""
        fn = part or self
        if hi <= lo:
            hi = lo + 1e-9
        grid = np.linspace(lo, hi, points)
        vals = fn(grid)
        slopes = np.abs(np.diff(vals)) / np.diff(grid)
        return float(np.max(slopes)) * 1.05 + 1e-12

    def image(self, lo, hi, part=None, points=401):
        fn = part or self
        vals = fn(np.linspace(lo, hi, points))
        return float(np.min(vals)), float(np.max(vals))


def _log(lam):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(lam)


def _log_abs(lam):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(lam))


DEFAULT_FUNCTIONS: dict[str, FunctionSpec] = {
    "identity": FunctionSpec("identity", lambda x: x, ODD),
    "cube": FunctionSpec("cube", lambda x: x**3, ODD),
    "square": FunctionSpec("square", lambda x: x**2, EVEN, ratio_at_zero=0.0),
    "sin": FunctionSpec("sin", np.sin, ODD),
    "cos": FunctionSpec("cos", np.cos, EVEN, ratio_at_zero=None),
    "log": FunctionSpec(
        "log",
        _log,
        GENERAL,
        domain=(0.0, math.inf),
        open_domain=True,
        domain_note="positive spectrum",
        extended=_log_abs,
        ratio_at_zero=None,
    ),
    "shifted-exp": FunctionSpec("shifted-exp", np.expm1, GENERAL, ratio_at_zero=0.0),
}


def lookup(name, functions=None):
    table = DEFAULT_FUNCTIONS if functions is None else functions
    try:
        return table[name]
    except KeyError:
        raise UnknownFunction(f"unknown function {name!r}") from None
