"""Shared machinery for models on a finite state space."""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ModelError
from ..measure import MAX_STATES, FiniteKernel, ProbabilityVector


def inverse_cdf(probabilities: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms in [0, 1) to state indices for one probability row.

    Zero-probability states are never returned, even when the row sums to
    slightly less than one in floating point.
    """
    cdf = np.cumsum(probabilities)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    last = np.flatnonzero(probabilities > 0)[-1]
    return np.minimum(idx, last)


def sample_rows(matrix: np.ndarray, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Draw ``y_i ~ matrix[states[i], :]`` by inverse CDF, one uniform per particle."""
    if np.all(matrix == matrix[0]):
        return inverse_cdf(matrix[0], u)
    out = np.empty(states.size, dtype=np.int64)
    for x in np.unique(states):
        sel = states == x
        out[sel] = inverse_cdf(matrix[x], u[sel])
    return out


class FiniteStateModel(ABC):
    """A mean field model on ``{0, ..., S-1}`` given by McKean kernels ``K_{n, eta}``.

    Generations are indexed by their *target*: ``kernel(eta, n)`` is the
    transition used to move from generation ``n - 1`` (where ``eta`` lives)
    to generation ``n``.
    """

    n_states: int
    initial: ProbabilityVector
    state_values: Optional[Sequence] = None

    def _check_states(self):
        if self.n_states > MAX_STATES:
            raise ModelError(f"{self.n_states} states exceeds the cap of {MAX_STATES}")

    @abstractmethod
    def kernel_matrix(self, eta: np.ndarray, n: int) -> np.ndarray:
        """Row-stochastic matrix of ``K_{n, eta}`` for a weight array ``eta``."""

    def phi_array(self, eta: np.ndarray, n: int) -> np.ndarray:
        return eta @ self.kernel_matrix(eta, n)

    def kernel(self, eta, n: int) -> FiniteKernel:
        return FiniteKernel(self.kernel_matrix(np.asarray(eta, dtype=float), n))

    def phi(self, eta, n: int) -> ProbabilityVector:
        """One step of the limiting flow, ``eta_n = Phi_n(eta_{n-1})``."""
        return ProbabilityVector(self.phi_array(np.asarray(eta, dtype=float), n))

    def exact_flow(self, horizon: int) -> List[ProbabilityVector]:
        if horizon < 0:
            raise ModelError("horizon must be nonnegative")
        flow = [self.initial]
        for n in range(1, horizon + 1):
            flow.append(self.phi(flow[-1], n))
        return flow

    def label(self, state: int):
        return state if self.state_values is None else self.state_values[state]

    # particle-level operations

    def sample_initial(self, N: int, rng: np.random.Generator) -> np.ndarray:
        return inverse_cdf(self.initial.weights, rng.random(N))

    def empirical(self, states: np.ndarray) -> np.ndarray:
        return np.bincount(states, minlength=self.n_states) / states.size

    def sample_step(self, states: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        k = self.kernel_matrix(self.empirical(states), n)
        return sample_rows(k, states, rng.random(states.size))

    def initial_integral(self, f) -> float:
        return float(self.initial.weights @ np.asarray(f, dtype=float))

    def initial_variance_of(self, f) -> float:
        return self.flow_variance(self.initial, f)

    def flow_integral(self, law: ProbabilityVector, f) -> float:
        return float(law.weights @ np.asarray(f, dtype=float))

    def flow_variance(self, law: ProbabilityVector, f) -> float:
        v = np.asarray(f, dtype=float)
        w = law.weights
        return float(w @ (v - w @ v) ** 2)

    def predict(self, states_prev: np.ndarray, n: int, f) -> float:
        """``(1/N) sum_i K_{n, eta^N}(f)(xi^i)`` for the previous cloud."""
        eta = self.empirical(states_prev)
        return float(eta @ (self.kernel_matrix(eta, n) @ np.asarray(f, dtype=float)))

    def conditional_variance(self, states_prev: np.ndarray, n: int, f) -> float:
        """``eta^N[K((f - Kf)^2)]``: conditional variance of the local error field."""
        eta = self.empirical(states_prev)
        k = self.kernel_matrix(eta, n)
        v = np.asarray(f, dtype=float)
        mean = k @ v
        return float(eta @ ((v[None, :] - mean[:, None]) ** 2 * k).sum(axis=1))
