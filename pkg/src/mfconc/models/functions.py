"""Real functions on the line with closed-form Gaussian integrals.

These describe drift components of the Gaussian model and test functions
for it. Each class knows its sup-norm and oscillation; the ``closed_form``
ones (polynomials and interval indicators) also know ``E f(m + sqrt(v) Z)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import ndtr

from ..errors import ModelError


def _gaussian_raw_moments(mean, variance, k_max: int):
    """Return ``[E X^k for k in 0..k_max]`` for ``X ~ N(mean, variance)``, vectorized."""
    mean = np.asarray(mean, dtype=float)
    sd = math.sqrt(variance)
    # E Z^j = (j-1)!! for even j
    z_moments = [1.0 if j == 0 else (0.0 if j % 2 else float(np.prod(np.arange(j - 1, 0, -2)))) for j in range(k_max + 1)]
    out = []
    for k in range(k_max + 1):
        total = np.zeros_like(mean)
        for j in range(0, k + 1, 2):
            total = total + math.comb(k, j) * mean ** (k - j) * sd ** j * z_moments[j]
        out.append(total)
    return out


@dataclass(frozen=True)
class Polynomial:
    coef: Tuple[float, ...]
    kind = "polynomial"

    def __post_init__(self):
        c = tuple(float(v) for v in self.coef) or (0.0,)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coef", c)

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    @property
    def closed_form(self) -> bool:
        return True

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coef)

    @property
    def sup_norm(self) -> float:
        return abs(self.coef[0]) if self.degree == 0 else math.inf

    @property
    def oscillation(self) -> float:
        return 0.0 if self.degree == 0 else math.inf

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coef[0] == 0.0

    def squared(self) -> "Polynomial":
        return Polynomial(tuple(np.polynomial.polynomial.polymul(self.coef, self.coef)))

    def gaussian_expectation(self, mean, variance):
        moments = _gaussian_raw_moments(mean, variance, self.degree)
        return sum(c * m for c, m in zip(self.coef, moments))

    def to_dict(self):
        if self.degree == 0:
            return {"kind": "constant", "value": self.coef[0]}
        return {"kind": "polynomial", "coef": list(self.coef)}


def Constant(value: float) -> Polynomial:
    return Polynomial((value,))


@dataclass(frozen=True)
class Indicator:
    """``1_{[lo, hi]}``; either end may be infinite."""

    lo: float = -math.inf
    hi: float = math.inf
    kind = "indicator"

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ModelError("indicator needs lo <= hi")

    @property
    def closed_form(self) -> bool:
        return True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.lo) & (x <= self.hi)).astype(float)

    sup_norm = 1.0
    oscillation = 1.0

    def squared(self) -> "Indicator":
        return self

    def gaussian_expectation(self, mean, variance):
        mean = np.asarray(mean, dtype=float)
        if variance == 0:
            return self(mean)
        sd = math.sqrt(variance)
        return ndtr((self.hi - mean) / sd) - ndtr((self.lo - mean) / sd)

    def to_dict(self):
        return {
            "kind": "indicator",
            "lo": None if math.isinf(self.lo) else self.lo,
            "hi": None if math.isinf(self.hi) else self.hi,
        }


@dataclass(frozen=True)
class Tanh:
    amplitude: float = 1.0
    scale: float = 1.0
    shift: float = 0.0
    kind = "tanh"
    closed_form = False

    def __call__(self, x):
        return self.amplitude * np.tanh(self.scale * (np.asarray(x, dtype=float) - self.shift))

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude) if self.scale != 0 else 0.0

    @property
    def oscillation(self) -> float:
        return 2 * abs(self.amplitude) if self.scale != 0 else 0.0

    def to_dict(self):
        return {"kind": "tanh", "amplitude": self.amplitude, "scale": self.scale, "shift": self.shift}


@dataclass(frozen=True)
class Sine:
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    kind = "sin"
    closed_form = False

    def __call__(self, x):
        return self.amplitude * np.sin(self.frequency * np.asarray(x, dtype=float) + self.phase)

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude) if self.frequency != 0 else abs(self.amplitude * math.sin(self.phase))

    @property
    def oscillation(self) -> float:
        return 2 * abs(self.amplitude) if self.frequency != 0 else 0.0

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "frequency": self.frequency, "phase": self.phase}


@dataclass(frozen=True)
class Cosine(Sine):
    kind = "cos"

    def __call__(self, x):
        return self.amplitude * np.cos(self.frequency * np.asarray(x, dtype=float) + self.phase)

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude) if self.frequency != 0 else abs(self.amplitude * math.cos(self.phase))


def _bound(value, default):
    return default if value is None else float(value)


_KINDS = {
    "polynomial": lambda d: Polynomial(tuple(d["coef"])),
    "constant": lambda d: Constant(d["value"]),
    "indicator": lambda d: Indicator(_bound(d.get("lo"), -math.inf), _bound(d.get("hi"), math.inf)),
    "tanh": lambda d: Tanh(d.get("amplitude", 1.0), d.get("scale", 1.0), d.get("shift", 0.0)),
    "sin": lambda d: Sine(d.get("amplitude", 1.0), d.get("frequency", 1.0), d.get("phase", 0.0)),
    "cos": lambda d: Cosine(d.get("amplitude", 1.0), d.get("frequency", 1.0), d.get("phase", 0.0)),
}


def function_from_dict(d: dict):
    """Build a function from ``{"kind": ..., ...}``."""
    try:
        return _KINDS[d["kind"]](d)
    except KeyError as exc:
        raise ModelError(f"unknown or incomplete function description {d!r}") from exc


def is_registered_test_function(f) -> bool:
    """Functions whose Gaussian-kernel integral is available in closed form."""
    if isinstance(f, Indicator):
        return True
    return isinstance(f, Polynomial) and f.degree <= 2
