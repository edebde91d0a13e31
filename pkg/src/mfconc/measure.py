"""Finite-state measures, bounded functions and Markov kernels.

Every object here is an immutable value: arrays are copied on construction
and marked read-only. Dense numpy storage is used throughout since state
spaces are small (see ``MAX_STATES``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, InvalidMeasure

#: probability vectors must sum to one within this tolerance
NORMALIZATION_TOL = 1e-12
#: default cap on finite state spaces; all oracles are dense
MAX_STATES = 64


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_probabilities(w: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(w)):
        raise InvalidMeasure(f"{what} contains non-finite weights")
    if np.any(w < 0):
        raise InvalidMeasure(f"{what} contains negative weights")
    total = w.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > NORMALIZATION_TOL):
        raise InvalidMeasure(
            f"{what} sums to {np.atleast_1d(total).tolist()}, not 1 within {NORMALIZATION_TOL}"
        )
    return w / total[..., None] if w.ndim > 1 else w / total


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """A probability measure on ``{0, ..., S-1}``.

    Weights within ``NORMALIZATION_TOL`` of summing to one are renormalized;
    anything further off is rejected.
    """

    weights: np.ndarray
    state_space_id: Optional[str] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidMeasure("weights must be a non-empty 1-d sequence")
        object.__setattr__(self, "weights", _frozen(_check_probabilities(w, "probability vector")))

    @classmethod
    def uniform(cls, n_states: int, state_space_id=None) -> "ProbabilityVector":
        return cls(np.full(n_states, 1.0 / n_states), state_space_id)

    @classmethod
    def dirac(cls, n_states: int, state: int, state_space_id=None) -> "ProbabilityVector":
        w = np.zeros(n_states)
        w[state] = 1.0
        return cls(w, state_space_id)

    @property
    def n_states(self) -> int:
        return self.weights.size

    def __len__(self):
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __repr__(self):
        return f"ProbabilityVector({self.weights.tolist()!r})"

    def transport(self, kernel: "FiniteKernel") -> "ProbabilityVector":
        """Return the measure ``mu K``."""
        k = as_kernel(kernel)
        if k.n_source != self.n_states:
            raise DimensionMismatch(
                f"measure has {self.n_states} states, kernel has {k.n_source} source states"
            )
        return ProbabilityVector(self.weights @ k.rows, self.state_space_id)


@dataclass(frozen=True, eq=False)
class BoundedFunction:
    """Real function on a finite state space, stored by value."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DimensionMismatch("function values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def indicator(cls, n_states: int, state: int) -> "BoundedFunction":
        v = np.zeros(n_states)
        v[state] = 1.0
        return cls(v)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"BoundedFunction({self.values.tolist()!r})"

    @property
    def oscillation(self) -> float:
        return float(self.values.max() - self.values.min())

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    """Markov kernel given by a row-stochastic matrix (source x target)."""

    rows: np.ndarray

    def __post_init__(self):
        m = np.array(self.rows, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise DimensionMismatch("kernel must be a non-empty 2-d matrix")
        object.__setattr__(self, "rows", _frozen(_check_probabilities(m, "kernel row")))

    @classmethod
    def identity(cls, n_states: int) -> "FiniteKernel":
        return cls(np.eye(n_states))

    @classmethod
    def constant(cls, measure, n_source: int) -> "FiniteKernel":
        w = np.asarray(measure, dtype=float)
        return cls(np.tile(w, (n_source, 1)))

    @property
    def n_source(self) -> int:
        return self.rows.shape[0]

    @property
    def n_target(self) -> int:
        return self.rows.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.rows, dtype=dtype)

    def __repr__(self):
        return f"FiniteKernel({self.rows.tolist()!r})"

    def apply(self, f) -> BoundedFunction:
        """Return the function ``K(f)(x) = sum_y K(x, y) f(y)``."""
        v = _values(f)
        if v.size != self.n_target:
            raise DimensionMismatch(
                f"function has {v.size} values, kernel has {self.n_target} target states"
            )
        return BoundedFunction(self.rows @ v)


@dataclass(frozen=True, eq=False)
class ParticleCloud:
    """States of N particles at one generation.

    Finite models store integer state indices; Gaussian models store reals.
    """

    states: np.ndarray
    generation: int = 0
    n_states: Optional[int] = field(default=None)

    def __post_init__(self):
        s = np.array(self.states, copy=True)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("a particle cloud needs N >= 1 states")
        if self.generation < 0:
            raise ValueError("generation must be nonnegative")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def size(self) -> int:
        return self.states.size

    def __len__(self):
        return self.states.size

    def counts(self, n_states: Optional[int] = None) -> np.ndarray:
        n_states = n_states or self.n_states
        if n_states is None:
            raise ValueError("number of states unknown for this cloud")
        return np.bincount(self.states, minlength=n_states)

    def empirical_measure(self, n_states: Optional[int] = None) -> ProbabilityVector:
        """The empirical measure ``(1/N) sum_i delta_{xi^i}`` (finite clouds only)."""
        c = self.counts(n_states)
        return ProbabilityVector(c / self.size)


MeasureLike = Union[ProbabilityVector, ParticleCloud]


def _values(f) -> np.ndarray:
    if isinstance(f, BoundedFunction):
        return f.values
    return np.asarray(f, dtype=float)


def as_kernel(k) -> FiniteKernel:
    return k if isinstance(k, FiniteKernel) else FiniteKernel(k)


def as_measure(mu) -> ProbabilityVector:
    return mu if isinstance(mu, ProbabilityVector) else ProbabilityVector(mu)


def oscillation(f) -> float:
    v = _values(f)
    return float(v.max() - v.min())


def integrate(mu: MeasureLike, f) -> float:
    """Integral ``mu(f)`` of a function against a measure or particle cloud.

    For a cloud with integer states ``f`` is indexed by state; for a cloud of
    real states ``f`` must be callable.
    """
    if isinstance(mu, ParticleCloud):
        if callable(f) and not isinstance(f, (BoundedFunction, np.ndarray)):
            return float(np.mean(f(mu.states)))
        v = _values(f)
        if mu.n_states is not None and mu.n_states != v.size:
            raise DimensionMismatch(f"cloud has {mu.n_states} states, function has {v.size}")
        if mu.states.max() >= v.size or mu.states.min() < 0:
            raise DimensionMismatch("cloud states fall outside the function's domain")
        return float(np.mean(v[mu.states]))
    w = np.asarray(mu.weights if isinstance(mu, ProbabilityVector) else mu, dtype=float)
    v = _values(f)
    if w.shape != v.shape:
        raise DimensionMismatch(f"measure has {w.size} states, function has {v.size}")
    return float(w @ v)


def dobrushin(kernel) -> float:
    """Dobrushin ergodic coefficient: max total-variation distance between rows.

    Works for rectangular row-stochastic matrices as well (e.g. kernels from a
    product space of labels and states).
    """
    m = np.asarray(kernel.rows if isinstance(kernel, FiniteKernel) else kernel, dtype=float)
    if m.ndim > 2:
        m = m.reshape(-1, m.shape[-1])
    if m.shape[0] < 2:
        return 0.0
    tv = 0.5 * np.abs(m[:, None, :] - m[None, :, :]).sum(axis=-1)
    return float(min(1.0, tv.max()))


def compose(k1, k2) -> FiniteKernel:
    """Composition ``(K1 K2)(f) = K1(K2(f))``."""
    a, b = as_kernel(k1), as_kernel(k2)
    if a.n_target != b.n_source:
        raise DimensionMismatch(
            f"cannot compose kernels with shapes {a.rows.shape} and {b.rows.shape}"
        )
    return FiniteKernel(a.rows @ b.rows)


def boltzmann_gibbs(eta, potential) -> ProbabilityVector:
    """Reweight ``eta`` by a positive potential and renormalize."""
    w = np.asarray(as_measure(eta).weights)
    g = _values(potential)
    if w.shape != g.shape:
        raise DimensionMismatch(f"measure has {w.size} states, potential has {g.size}")
    if np.any(g <= 0):
        raise ValueError("potential must be positive")
    wg = w * g
    return ProbabilityVector(wg / wg.sum())


def conditional_variance(kernel, f) -> np.ndarray:
    """Per-row variance ``K([f - K(f)(x)]^2)(x)``."""
    m = np.asarray(as_kernel(kernel).rows)
    v = _values(f)
    mean = m @ v
    return ((v[None, :] - mean[:, None]) ** 2 * m).sum(axis=1)
