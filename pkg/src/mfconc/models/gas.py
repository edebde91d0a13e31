"""Collision-type McKean model of gases on a finite state space."""
from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, ModelError
from ..measure import ProbabilityVector, as_measure, dobrushin
from .base import FiniteStateModel

_NORM_TOL = 1e-12


class McKeanGasModel(FiniteStateModel):
    """Time-homogeneous gas model with McKean transition

    ``K_eta(x, dy) = sum_s nu(s) eta(a(s, .)) M((s, x), dy)``.

    Parameters
    ----------
    collision_weights : (L, S) array
        ``a(s, x) >= 0`` with ``sum_s nu(s) a(s, x) = 1`` for every state ``x``.
    nu : (L,) array
        Nonnegative label weights.
    post_collision : (L, S, S) array
        ``M((s, x), y)``, row-stochastic in ``y``.
    initial : array or ProbabilityVector
    """

    def __init__(self, collision_weights, nu, post_collision, initial, state_values=None):
        self.collision_weights = np.array(collision_weights, dtype=float)
        self.nu = np.array(nu, dtype=float)
        self.post_collision = np.array(post_collision, dtype=float)
        self.initial = as_measure(initial)
        self.state_values = None if state_values is None else tuple(state_values)
        for arr in (self.collision_weights, self.nu, self.post_collision):
            arr.setflags(write=False)
        self.n_states = self.initial.n_states
        self._check_states()
        self._validate()

    def _validate(self):
        a, nu, m = self.collision_weights, self.nu, self.post_collision
        n_labels, s = a.shape if a.ndim == 2 else (None, None)
        if a.ndim != 2 or s != self.n_states:
            raise DimensionMismatch(f"collision weights must have shape (L, {self.n_states})")
        if nu.shape != (n_labels,):
            raise DimensionMismatch(f"nu must have {n_labels} entries")
        if m.shape != (n_labels, s, s):
            raise DimensionMismatch(f"post-collision kernel must have shape ({n_labels}, {s}, {s})")
        if np.any(a < 0) or np.any(nu < 0) or np.any(m < 0):
            raise ModelError("gas model weights must be nonnegative")
        if np.any(np.abs(nu @ a - 1.0) > _NORM_TOL):
            raise ModelError("normalization sum_s nu(s) a(s, x) = 1 violated")
        if np.any(np.abs(m.sum(axis=-1) - 1.0) > _NORM_TOL):
            raise ModelError("post-collision rows must sum to 1")

    def __repr__(self):
        return f"McKeanGasModel(n_states={self.n_states}, labels={self.nu.size})"

    def label_weights(self, eta: np.ndarray) -> np.ndarray:
        """``w(s) = nu(s) eta(a(s, .))``; sums to one under the normalization."""
        return self.nu * (self.collision_weights @ eta)

    def kernel_matrix(self, eta: np.ndarray, n: int = 1) -> np.ndarray:
        w = self.label_weights(eta)
        if abs(w.sum() - 1.0) > 1e-10:
            raise ModelError("normalization sum_s nu(s) a(s, x) = 1 violated")
        return np.einsum("s,sxy->xy", w, self.post_collision)

    def phi_array(self, eta: np.ndarray, n: int = 1) -> np.ndarray:
        # sum_x eta(x) sum_s w(s) M((s,x), .)
        w = self.label_weights(eta)
        return np.einsum("s,x,sxy->y", w, eta, self.post_collision)

    def collision_oscillation(self) -> float:
        """``sum_s nu(s) osc(a(s, .))``."""
        a = self.collision_weights
        return float(self.nu @ (a.max(axis=1) - a.min(axis=1)))

    def post_collision_dobrushin(self) -> float:
        return dobrushin(self.post_collision.reshape(-1, self.n_states))


def two_velocities(p_plus: float) -> McKeanGasModel:
    """Discrete two-velocities Maxwellian gas on ``{-1, +1}``.

    State/label index 0 is velocity ``-1``, index 1 is ``+1``;
    ``a(s, x) = 1_s(x)`` and ``M((s, x), .) = delta_{s x}``.
    """
    values = (-1, 1)
    m = np.zeros((2, 2, 2))
    for si, s in enumerate(values):
        for xi, x in enumerate(values):
            m[si, xi, values.index(s * x)] = 1.0
    return McKeanGasModel(
        collision_weights=np.eye(2),
        nu=[1.0, 1.0],
        post_collision=m,
        initial=[1.0 - p_plus, p_plus],
        state_values=values,
    )


def gas_phi_step(model: McKeanGasModel, eta) -> ProbabilityVector:
    """Exact one-step distribution ``eta K_eta``."""
    return model.phi(as_measure(eta).weights, 1)


def gas_kernel(model: McKeanGasModel, eta):
    """McKean kernel ``K_eta`` of the gas model."""
    return model.kernel(as_measure(eta).weights, 1)
