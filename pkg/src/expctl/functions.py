"""Scalar function descriptors for spectral calculus and mixture inversion."""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError

Interval = Tuple[float, float]


@dataclass(frozen=True)
class ScalarFunction:
    """A vectorized real function with a declared domain.

    Attributes:
        name: Identifier used on the command line and in error messages.
        fn: Vectorized callable ``ndarray -> ndarray``.
        domain: Closed interval where ``fn`` is defined.  Endpoints listed
            in ``open_ends`` are excluded.
        monotone: Intervals on which ``fn`` is strictly monotone; mixture
            inversion only works inside one of them.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    domain: Interval = (-np.inf, np.inf)
    open_ends: Tuple[str, ...] = ()
    monotone: Sequence[Interval] = field(default_factory=tuple)
    affine: bool = False

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        bad = (x < lo) | (x > hi)
        if "lo" in self.open_ends:
            bad |= x == lo
        if "hi" in self.open_ends:
            bad |= x == hi
        if np.any(bad):
            raise DomainError(f"{self.name} is undefined at {x[bad].tolist()}")

    def __call__(self, x):
        self.check_domain(x)
        with np.errstate(all="ignore"):
            y = self.fn(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(y)):
            raise DomainError(f"{self.name} produced non-finite values")
        return y

    def __add__(self, other: "ScalarFunction") -> "ScalarFunction":
        lo = max(self.domain[0], other.domain[0])
        hi = min(self.domain[1], other.domain[1])
        a, b = self.fn, other.fn
        return ScalarFunction(
            name=f"{self.name}+{other.name}",
            fn=lambda x: a(x) + b(x),
            domain=(lo, hi),
            open_ends=tuple(set(self.open_ends) | set(other.open_ends)),
            affine=self.affine and other.affine,
        )

    def monotone_interval_containing(self, lo: float, hi: float) -> Optional[Interval]:
        for a, b in self.monotone:
            if a <= lo and hi <= b:
                return (a, b)
        return None


def affine(slope: float, intercept: float) -> ScalarFunction:
    mono = ((-np.inf, np.inf),) if slope != 0 else ()
    return ScalarFunction(
        name=f"affine({slope:g},{intercept:g})",
        fn=lambda x: slope * x + intercept,
        monotone=mono,
        affine=True,
    )


def polynomial(coeffs: Sequence[float]) -> ScalarFunction:
    """Polynomial with coefficients in increasing degree order."""
    c = np.asarray(coeffs, dtype=float)
    return ScalarFunction(
        name="poly(" + ",".join(f"{v:g}" for v in c) + ")",
        fn=lambda x: np.polynomial.polynomial.polyval(x, c),
        affine=len(c) <= 2,
    )


IDENTITY = ScalarFunction("identity", lambda x: x, monotone=((-np.inf, np.inf),), affine=True)
SQUARE = ScalarFunction("square", np.square, monotone=((-np.inf, 0.0), (0.0, np.inf)))
CUBE = ScalarFunction("cube", lambda x: x**3, monotone=((-np.inf, np.inf),))
EXP = ScalarFunction("exp", np.exp, monotone=((-np.inf, np.inf),))
LOG = ScalarFunction("log", np.log, domain=(0.0, np.inf), open_ends=("lo",), monotone=((0.0, np.inf),))
SQRT = ScalarFunction("sqrt", np.sqrt, domain=(0.0, np.inf), monotone=((0.0, np.inf),))

REGISTRY = {f.name: f for f in (IDENTITY, SQUARE, CUBE, EXP, LOG, SQRT)}


def get_function(name: str) -> ScalarFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}; choose from {sorted(REGISTRY)}") from None
