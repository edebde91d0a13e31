"""N-particle mean field chain, local error fields and fluctuation fields.

Each replication draws from its own counter-based stream (Philox keyed by
``SeedSequence(master_seed, spawn_key=(replication_index,))``), so a run is
fully determined by ``(model, config)`` whatever the thread layout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import numpy as np

from .errors import ModelError
from .measure import BoundedFunction, ParticleCloud


@dataclass(frozen=True)
class SimulationConfig:
    N: int
    horizon: int
    master_seed: int = 0
    replication_index: int = 0

    def __post_init__(self):
        if int(self.N) < 1:
            raise ValueError("N must be at least 1")
        if int(self.horizon) < 0:
            raise ValueError("horizon must be nonnegative")
        if int(self.replication_index) < 0:
            raise ValueError("replication index must be nonnegative")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master seed must fit in 64 unsigned bits")

    def rng(self) -> np.random.Generator:
        return make_rng(self.master_seed, self.replication_index)


def make_rng(master_seed: int, replication_index: int = 0) -> np.random.Generator:
    """Independent stream for one replication; no state is shared between streams."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(replication_index),))
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class Trajectory:
    """Clouds of generations ``0..horizon`` from one replication."""

    clouds: List[ParticleCloud]
    model: object = field(repr=False)

    def __post_init__(self):
        sizes = {c.size for c in self.clouds}
        if len(sizes) > 1:
            raise ValueError("all clouds of a trajectory must have the same size")

    @property
    def N(self) -> int:
        return self.clouds[0].size

    @property
    def horizon(self) -> int:
        return len(self.clouds) - 1

    def __getitem__(self, n) -> ParticleCloud:
        return self.clouds[n]


def _is_finite(model) -> bool:
    return hasattr(model, "n_states")


def _make_cloud(model, states, generation) -> ParticleCloud:
    return ParticleCloud(states, generation, getattr(model, "n_states", None))


def init_cloud(model, config: SimulationConfig, rng: Optional[np.random.Generator] = None) -> ParticleCloud:
    """N iid draws from ``eta_0``."""
    rng = config.rng() if rng is None else rng
    return _make_cloud(model, model.sample_initial(config.N, rng), 0)


def mean_field_step(model, cloud: ParticleCloud, rng: np.random.Generator) -> ParticleCloud:
    """Move every particle with the McKean kernel built from the cloud's empirical measure."""
    n = cloud.generation + 1
    return _make_cloud(model, model.sample_step(np.asarray(cloud.states), n, rng), n)


def simulate(model, config: SimulationConfig) -> Trajectory:
    rng = config.rng()
    clouds = [init_cloud(model, config, rng)]
    for _ in range(config.horizon):
        clouds.append(mean_field_step(model, clouds[-1], rng))
    return Trajectory(clouds, model)


def iterate_states(model, N: int, horizon: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Raw state arrays of generations ``0..horizon``; the fast path used by verify."""
    states = model.sample_initial(N, rng)
    yield states
    for n in range(1, horizon + 1):
        states = model.sample_step(states, n, rng)
        yield states


def _fvalues(f):
    return f.values if isinstance(f, BoundedFunction) else f


def cloud_integral(model, states: np.ndarray, f) -> float:
    """``eta^N(f)`` for a raw state array."""
    f = _fvalues(f)
    if _is_finite(model):
        return float(np.mean(np.asarray(f, dtype=float)[states]))
    return float(np.mean(f(states)))


def predicted_integral(model, prev_states: Optional[np.ndarray], n: int, f) -> float:
    """``eta^N_{n-1} K_{n, eta^N_{n-1}}(f)``; ``eta_0(f)`` when ``n == 0``."""
    f = _fvalues(f)
    if n == 0:
        return model.initial_integral(f)
    return model.predict(prev_states, n, f)


def _shift(model, f):
    """Reference value subtracted before integrating; fields are shift invariant.

    Makes the fields of a constant function exactly zero in floating point.
    """
    if _is_finite(model):
        return float(np.asarray(f, dtype=float)[0])
    return 0.0


def _check_generation(trajectory: Trajectory, n: int):
    if not 0 <= n <= trajectory.horizon:
        raise ModelError(f"generation {n} outside 0..{trajectory.horizon}")


def local_error_field(model, trajectory: Trajectory, n: int, f) -> float:
    """``W_n^N(f) = sqrt(N) (eta_n^N(f) - eta_{n-1}^N K_{n, eta_{n-1}^N}(f))``."""
    _check_generation(trajectory, n)
    prev = None if n == 0 else np.asarray(trajectory[n - 1].states)
    f = _fvalues(f)
    if _is_finite(model):
        f = np.asarray(f, dtype=float) - _shift(model, f)
    now = cloud_integral(model, np.asarray(trajectory[n].states), f)
    return math.sqrt(trajectory.N) * (now - predicted_integral(model, prev, n, f))


def fluctuation_field(model, trajectory: Trajectory, n: int, f, flow: Optional[Sequence] = None) -> float:
    """``V_n^N(f) = sqrt(N) (eta_n^N(f) - eta_n(f))`` against the exact flow.

    Raises ``OracleUnavailable`` when the model has no exact flow.
    """
    _check_generation(trajectory, n)
    flow = model.exact_flow(n) if flow is None else flow
    f = _fvalues(f)
    if _is_finite(model):
        f = np.asarray(f, dtype=float) - _shift(model, f)
    now = cloud_integral(model, np.asarray(trajectory[n].states), f)
    return math.sqrt(trajectory.N) * (now - model.flow_integral(flow[n], f))


def replication_fields(model, config: SimulationConfig, functions: Sequence, flow_values=None,
                       with_condvar: bool = False):
    """Simulate one replication and collect per-generation field values.

    Returns ``(W, V)``, or ``(W, V, C)`` with ``with_condvar``, each of shape
    ``(horizon + 1, len(functions))``. ``C[n, j]`` is the conditional variance
    of ``W_n^N(f_j)`` given generation ``n - 1``. ``flow_values[n][j]`` is
    ``eta_n(f_j)``; without it ``V`` is all NaN.
    """
    rng = config.rng()
    h, k = config.horizon, len(functions)
    fs = [_fvalues(f) for f in functions]
    w = np.empty((h + 1, k))
    v = np.full((h + 1, k), np.nan)
    c = np.empty((h + 1, k)) if with_condvar else None
    root_n = math.sqrt(config.N)
    finite = _is_finite(model)
    shifts = np.array([_shift(model, f) for f in fs])
    if finite:
        fs = [np.asarray(f, dtype=float) - c for f, c in zip(fs, shifts)]
        fmat = np.column_stack(fs)
    prev = None
    for n, states in enumerate(iterate_states(model, config.N, h, rng)):
        if finite:
            now = (np.bincount(states, minlength=model.n_states) / config.N) @ fmat
        else:
            now = np.array([np.mean(f(states)) for f in fs])
        pred = np.array([predicted_integral(model, prev, n, f) for f in fs])
        w[n] = root_n * (now - pred)
        if flow_values is not None:
            v[n] = root_n * (now - (np.asarray(flow_values[n], dtype=float) - shifts))
        if with_condvar:
            if n == 0:
                c[n] = [model.initial_variance_of(f) for f in fs]
            else:
                c[n] = [model.conditional_variance(prev, n, f) for f in fs]
        prev = states
    return (w, v, c) if with_condvar else (w, v)


def trajectory_rows(trajectory: Trajectory, replication: int = 0):
    """Long-format rows ``(replication, generation, particle_index, state)``."""
    model = trajectory.model
    label = getattr(model, "label", None)
    for cloud in trajectory.clouds:
        for i, s in enumerate(cloud.states.tolist()):
            yield replication, cloud.generation, i, (label(s) if label else s)


def aggregate_rows(trajectory: Trajectory, functions: Sequence, names: Sequence[str], replication: int = 0):
    """Rows ``(replication, generation, statistic, value)`` with ``eta_n^N(f)`` per function."""
    for cloud in trajectory.clouds:
        for name, f in zip(names, functions):
            yield replication, cloud.generation, name, cloud_integral(trajectory.model, np.asarray(cloud.states), f)
