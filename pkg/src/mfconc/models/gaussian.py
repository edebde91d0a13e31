"""One-dimensional Gaussian mean field model with drift linear in the measure."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import ModelError, OracleUnavailable
from .functions import Polynomial, is_registered_test_function


@dataclass(frozen=True)
class GaussianMoments:
    """Exact ``N(mean, variance)`` law of one generation (decoupled linear case)."""

    mean: float
    variance: float


class GaussianMeanFieldModel:
    """Transitions ``K_eta(x, .) = N(a(x) + eta(b) c(x), Q)`` on the real line.

    ``b`` and ``c`` must be bounded; ``a`` may be any registered function.
    ``eta_0`` is ``N(initial_mean, initial_variance)``.
    """

    def __init__(self, drift_a, drift_b, drift_c, noise_variance=1.0,
                 initial_mean=0.0, initial_variance=1.0):
        self.drift_a = drift_a
        self.drift_b = drift_b
        self.drift_c = drift_c
        self.noise_variance = float(noise_variance)
        self.initial_mean = float(initial_mean)
        self.initial_variance = float(initial_variance)
        if self.noise_variance <= 0:
            raise ModelError("noise variance must be positive")
        if self.initial_variance < 0:
            raise ModelError("initial variance must be nonnegative")
        for name, fn in (("b", drift_b), ("c", drift_c)):
            if not math.isfinite(fn.sup_norm) or not math.isfinite(fn.oscillation):
                raise ModelError(f"drift component {name} must be bounded")

    def __repr__(self):
        return (
            f"GaussianMeanFieldModel(a={self.drift_a}, b={self.drift_b}, c={self.drift_c}, "
            f"Q={self.noise_variance})"
        )

    @property
    def decoupled(self) -> bool:
        c = self.drift_c
        return isinstance(c, Polynomial) and c.is_zero()

    def drift(self, x, eta_b_mean: float):
        return self.drift_a(x) + eta_b_mean * self.drift_c(x)

    # particle-level operations

    def sample_initial(self, N: int, rng: np.random.Generator) -> np.ndarray:
        return self.initial_mean + math.sqrt(self.initial_variance) * rng.standard_normal(N)

    def sample_step(self, states: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        means = self.drift(states, float(np.mean(self.drift_b(states))))
        return means + math.sqrt(self.noise_variance) * rng.standard_normal(states.size)

    def _check_test_function(self, f):
        if not is_registered_test_function(f):
            raise ModelError(
                f"{f!r} has no closed-form Gaussian integral; use a polynomial of "
                "degree <= 2 or an interval indicator"
            )

    def initial_integral(self, f) -> float:
        self._check_test_function(f)
        return float(f.gaussian_expectation(self.initial_mean, self.initial_variance))

    def initial_variance_of(self, f) -> float:
        self._check_test_function(f)
        m, v = self.initial_mean, self.initial_variance
        mean = f.gaussian_expectation(m, v)
        return float(f.squared().gaussian_expectation(m, v) - mean * mean)

    def predict(self, states_prev: np.ndarray, n: int, f) -> float:
        self._check_test_function(f)
        means = self.drift(states_prev, float(np.mean(self.drift_b(states_prev))))
        return float(np.mean(f.gaussian_expectation(means, self.noise_variance)))

    def conditional_variance(self, states_prev: np.ndarray, n: int, f) -> float:
        self._check_test_function(f)
        means = self.drift(states_prev, float(np.mean(self.drift_b(states_prev))))
        q = self.noise_variance
        m1 = f.gaussian_expectation(means, q)
        m2 = f.squared().gaussian_expectation(means, q)
        return float(np.mean(np.maximum(m2 - m1 * m1, 0.0)))

    # exact flow (decoupled, linear drift only)

    def exact_flow(self, horizon: int) -> List[GaussianMoments]:
        a = self.drift_a
        if not (self.decoupled and isinstance(a, Polynomial) and a.degree <= 1):
            raise OracleUnavailable(
                "no closed-form oracle: Gaussian flows are exact only with c = 0 and linear a"
            )
        a0 = a.coef[0]
        a1 = a.coef[1] if a.degree == 1 else 0.0
        flow = [GaussianMoments(self.initial_mean, self.initial_variance)]
        for _ in range(horizon):
            prev = flow[-1]
            flow.append(GaussianMoments(a0 + a1 * prev.mean, a1 * a1 * prev.variance + self.noise_variance))
        return flow

    def flow_integral(self, law: GaussianMoments, f) -> float:
        self._check_test_function(f)
        return float(f.gaussian_expectation(law.mean, law.variance))

    def flow_variance(self, law: GaussianMoments, f) -> float:
        m = f.gaussian_expectation(law.mean, law.variance)
        return float(f.squared().gaussian_expectation(law.mean, law.variance) - m * m)


def gaussian_kernel_sample(model: GaussianMeanFieldModel, x: float, eta_b_mean: float,
                           rng: np.random.Generator) -> float:
    """One draw from ``N(a(x) + eta_b_mean c(x), Q)``."""
    return float(model.drift(x, eta_b_mean) + math.sqrt(model.noise_variance) * rng.standard_normal())
