"""Feynman-Kac flows and their genetic-type McKean kernels."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionMismatch, ModelError
from ..measure import (
    FiniteKernel,
    ProbabilityVector,
    as_measure,
    boltzmann_gibbs,
    dobrushin,
)
from .base import FiniteStateModel

_EPS_TOL = 1e-12


def _pick(seq, index, what):
    # a single entry means the model is time homogeneous
    if len(seq) == 1:
        return seq[0]
    if not 0 <= index < len(seq):
        raise ModelError(f"generation out of range: no {what} for index {index}")
    return seq[index]


class FeynmanKacModel(FiniteStateModel):
    """Feynman-Kac model ``eta_n = Psi_{G_{n-1}}(eta_{n-1}) M_n``.

    Parameters
    ----------
    potentials : sequence of arrays
        ``G_0, G_1, ...``; ``G_p`` weights the selection from generation ``p``.
        A single entry is used for every generation.
    mutations : sequence of (S, S) arrays
        ``M_1, M_2, ...``; ``M_n`` moves particles into generation ``n``.
    epsilons : sequence of float
        ``eps_0, eps_1, ...`` with ``eps_p * max(G_p) <= 1``. ``eps = 0`` gives
        the plain selection/mutation sampler.
    initial : array or ProbabilityVector
        ``eta_0``.
    """

    def __init__(self, potentials, mutations, epsilons=(0.0,), initial=None, state_values=None):
        self.potentials = tuple(np.array(g, dtype=float) for g in potentials)
        self.mutations = tuple(FiniteKernel(m) for m in mutations)
        self.epsilons = tuple(float(e) for e in epsilons)
        if not self.potentials or not self.mutations or not self.epsilons:
            raise ModelError("potentials, mutations and epsilons must be non-empty")
        self.n_states = self.mutations[0].n_source
        if initial is None:
            initial = ProbabilityVector.uniform(self.n_states)
        self.initial = as_measure(initial)
        self.state_values = None if state_values is None else tuple(state_values)
        self._check_states()
        self._validate()

    def _validate(self):
        s = self.n_states
        for m in self.mutations:
            if m.rows.shape != (s, s):
                raise DimensionMismatch(f"mutation kernel shape {m.rows.shape} != ({s}, {s})")
        for g in self.potentials:
            if g.shape != (s,):
                raise DimensionMismatch(f"potential has {g.size} values, expected {s}")
            if not np.all(np.isfinite(g)) or np.any(g <= 0):
                raise ModelError("potential must be positive and finite")
        if self.initial.n_states != s:
            raise DimensionMismatch("initial distribution has the wrong number of states")
        for p in range(max(len(self.epsilons), len(self.potentials))):
            eps = self.epsilon(p)
            if not 0.0 <= eps <= 1.0:
                raise ModelError(f"epsilon_{p} = {eps} is outside [0, 1]")
            if eps * self.potential(p).max() > 1.0 + _EPS_TOL:
                raise ModelError(f"epsilon_{p} * max(G_{p}) exceeds 1")

    def __repr__(self):
        return (
            f"FeynmanKacModel(n_states={self.n_states}, potentials={len(self.potentials)}, "
            f"mutations={len(self.mutations)}, epsilons={self.epsilons})"
        )

    def potential(self, p: int) -> np.ndarray:
        return _pick(self.potentials, p, "potential")

    def mutation(self, n: int) -> np.ndarray:
        if n < 1:
            raise ModelError("mutations are indexed from generation 1")
        return _pick(self.mutations, n - 1, "mutation").rows

    def epsilon(self, p: int) -> float:
        return _pick(self.epsilons, p, "epsilon")

    @property
    def time_homogeneous(self) -> bool:
        return len(self.potentials) == 1 and len(self.mutations) == 1

    # limiting flow

    def phi_array(self, eta: np.ndarray, n: int) -> np.ndarray:
        g = self.potential(n - 1)
        wg = eta * g
        return (wg / wg.sum()) @ self.mutation(n)

    def kernel_matrix(self, eta: np.ndarray, n: int) -> np.ndarray:
        eg = self.epsilon(n - 1) * self.potential(n - 1)
        if np.any(eg > 1.0 + _EPS_TOL):
            raise ModelError("epsilon * G exceeds 1")
        target = self.phi_array(eta, n)
        k = eg[:, None] * self.mutation(n) + (1.0 - eg)[:, None] * target[None, :]
        return k

    def q_matrix(self, n: int) -> np.ndarray:
        """Unnormalized transition ``Q_n(x, y) = G_{n-1}(x) M_n(x, y)``."""
        return self.potential(n - 1)[:, None] * self.mutation(n)

    def q_semigroup(self, p: int, n: int) -> np.ndarray:
        """``Q_{p,n} = Q_{p+1} ... Q_n`` (identity when ``p == n``)."""
        if p > n:
            raise ModelError("semigroup requires p <= n")
        out = np.eye(self.n_states)
        for k in range(p + 1, n + 1):
            out = out @ self.q_matrix(k)
        return out

    def first_order_operator(self, eta_p, p: int, n: int, f) -> np.ndarray:
        """``D_{eta_p} Phi_{p,n}(f) = Q_{p,n}(f - Phi_{p,n}(eta_p) f) / eta_p(Q_{p,n} 1)``."""
        eta = np.asarray(eta_p, dtype=float)
        v = np.asarray(f, dtype=float)
        q = self.q_semigroup(p, n)
        mass = q.sum(axis=1)
        eta_n_f = eta @ (q @ v) / (eta @ mass)
        return q @ (v - eta_n_f) / (eta @ mass)

    def semigroup_constants(self, p: int, n: int):
        """Return ``(q_{p,n}, beta(P_{p,n}))`` for the normalized semigroup."""
        q = self.q_semigroup(p, n)
        mass = q.sum(axis=1)
        return float(mass.max() / mass.min()), dobrushin(q / mass[:, None])

    def is_interacting(self, horizon: Optional[int] = None) -> bool:
        """False when every potential is constant, so particles evolve independently."""
        gens = range(len(self.potentials)) if horizon is None else range(max(horizon, 1))
        return any(np.ptp(self.potential(p)) > 0 for p in gens)


def fk_phi_step(model: FeynmanKacModel, eta, n: int) -> ProbabilityVector:
    """``Phi_n(eta)``: Boltzmann-Gibbs selection with ``G_{n-1}`` then mutation ``M_n``."""
    selected = boltzmann_gibbs(eta, model.potential(n - 1))
    return selected.transport(FiniteKernel(model.mutation(n)))


def fk_mckean_kernel(model: FeynmanKacModel, eta, n: int) -> FiniteKernel:
    """McKean kernel ``K_{n+1, eta}`` for ``eta`` at generation ``n``.

    ``K(x, .) = eps_n G_n(x) M_{n+1}(x, .) + (1 - eps_n G_n(x)) Phi_{n+1}(eta)``.
    """
    return model.kernel(as_measure(eta).weights, n + 1)


def partition_function(model: FeynmanKacModel, horizon: int, trajectory=None):
    """Normalizing constant ``Z_n = prod_{p < n} eta_p(G_p)``.

    With a particle trajectory (a sequence of state arrays or clouds) the
    particle estimate ``prod_{p < n} eta^N_p(G_p)`` is returned as well.
    """
    flow = model.exact_flow(max(horizon - 1, 0))
    exact = 1.0
    for p in range(horizon):
        exact *= float(flow[p].weights @ model.potential(p))
    if trajectory is None:
        return exact
    clouds = getattr(trajectory, "clouds", trajectory)
    estimate = 1.0
    for p in range(horizon):
        states = np.asarray(getattr(clouds[p], "states", clouds[p]))
        estimate *= float(np.mean(model.potential(p)[states]))
    return exact, estimate


def two_state_example(epsilon: float = 0.0, potential: Sequence[float] = (1.0, 2.0)) -> FeynmanKacModel:
    """The 2-state reference model used throughout the test-suite."""
    return FeynmanKacModel(
        potentials=[potential],
        mutations=[[[0.7, 0.3], [0.4, 0.6]]],
        epsilons=[epsilon],
        initial=[0.5, 0.5],
    )
