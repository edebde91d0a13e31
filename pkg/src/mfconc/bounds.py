"""Concentration certificates and the model parameters that feed them.

All certificates are deviation levels that the fluctuation ``V_n^N(f)``
(or ``[eta_n^N - eta_n](f)`` in the "eta scale", i.e. divided by
``sqrt(N)``) exceeds with probability at most ``exp(-x)``, for any test
function with oscillation at most one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .convex import ALPHA0, ALPHA1, inverse
from .errors import DegenerateRate, ModelError

BOUND_MODE_SIGMA_SQ = 0.25
EXACT_MODE_MAX_STATES = 20


def _eps0_inv(x: float) -> float:
    return inverse(ALPHA0, x).value


def _eps1_inv(x: float) -> float:
    return inverse(ALPHA1, x).value


def _nonneg(name, value):
    value = float(value)
    if not value >= 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return value


@dataclass(frozen=True)
class ConcentrationParams:
    """The scalar bundle ``(r_n, sigma_bar_n^2, beta_n^2, b_n^*)``."""

    r: float
    sigma_bar_sq: float
    beta_sq: float
    b_star: float

    def __post_init__(self):
        for name in ("r", "sigma_bar_sq", "beta_sq", "b_star"):
            object.__setattr__(self, name, _nonneg(name, getattr(self, name)))

    @property
    def sigma_bar(self) -> float:
        return math.sqrt(self.sigma_bar_sq)

    @property
    def beta(self) -> float:
        return math.sqrt(self.beta_sq)

    def to_dict(self) -> Dict[str, float]:
        return {"r": self.r, "sigma_bar_sq": self.sigma_bar_sq, "beta_sq": self.beta_sq, "b_star": self.b_star}


@dataclass(frozen=True)
class TriangularArrayParams:
    """Constants of a triangular array of conditionally centered variables.

    ``d`` bounds the perturbation term, ``c_bar_sq = sum c_p^2 / b_star^2``
    and ``delta_bar_sq = sum ((b_p - a_p) / 2)^2``.
    """

    d: float
    c_bar_sq: float
    delta_bar_sq: float
    b_star: float

    def __post_init__(self):
        for name in ("d", "c_bar_sq", "delta_bar_sq", "b_star"):
            object.__setattr__(self, name, _nonneg(name, getattr(self, name)))

    @classmethod
    def from_sequences(cls, a: Sequence[float], b: Sequence[float], c: Sequence[float], d: float):
        a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
        if not a.shape == b.shape == c.shape or a.ndim != 1 or a.size == 0:
            raise ValueError("a, b and c must be equal-length non-empty sequences")
        if np.any(a > 0) or np.any(b < 0):
            raise ValueError("support bounds must satisfy a_p <= 0 <= b_p")
        if np.any(c < 0):
            raise ValueError("variance bounds c_p must be nonnegative")
        b_star = float(b.max())
        c_bar_sq = float(np.sum(c**2) / b_star**2) if b_star > 0 else 0.0
        return cls(d, c_bar_sq, float(np.sum(((b - a) / 2) ** 2)), b_star)

    @classmethod
    def from_concentration(cls, p: ConcentrationParams):
        """The array behind the fluctuation certificates, in ``sqrt(N) V`` units."""
        return cls(p.r, p.sigma_bar_sq, p.beta_sq, p.b_star)


@dataclass(frozen=True)
class MixingParams:
    """Constants of the mixing condition ``M^m(x, .) >= eps_m M^m(y, .)``."""

    m: int
    eps_m: float
    delta_m: float
    delta_m_minus_1: float

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("m must be a positive integer")
        if not 0 < self.eps_m <= 1:
            raise ValueError("eps_m must lie in (0, 1]")
        if self.delta_m < 1 or self.delta_m_minus_1 < 1:
            raise ValueError("delta_m and delta_{m-1} must be >= 1")
        if self.eps_m**2 > self.delta_m_minus_1:
            raise ValueError("eps_m^2 must not exceed delta_{m-1}")

    @property
    def contraction(self) -> float:
        """``1 - eps_m^2 / delta_{m-1}``, the per-block Dobrushin contraction."""
        return 1.0 - self.eps_m**2 / self.delta_m_minus_1

    def varpi(self, k: int, l: int) -> float:
        # 1 - contraction^l without cancellation when eps_m is small
        u = self.eps_m**2 / self.delta_m_minus_1
        gap = 1.0 if u >= 1.0 else -math.expm1(l * math.log1p(-u))
        return self.m * (self.delta_m / self.eps_m) ** k / gap


# ---------------------------------------------------------------------------
# certificates


def thm12_events(p: ConcentrationParams, x: float, N: int) -> Dict[str, float]:
    """Bennett and Hoeffding deviation levels for ``V_n^N(f)`` and ``[eta^N - eta](f)``."""
    x = _nonneg("x", x)
    if N < 1:
        raise ValueError("N must be at least 1")
    root_n = math.sqrt(N)
    # each scale is evaluated directly rather than by rescaling the other
    e0 = 1.0 + _eps0_inv(x)
    bennett_tail = p.sigma_bar_sq * p.b_star * _eps1_inv(x / (N * p.sigma_bar_sq)) if p.sigma_bar_sq > 0 else 0.0
    return {
        "bennett": p.r / root_n * e0 + root_n * bennett_tail,
        "hoeffding": p.r / root_n * e0 + math.sqrt(2.0 * x) * p.beta,
        "bennett_eta": p.r / N * e0 + bennett_tail,
        "hoeffding_eta": p.r / N * e0 + math.sqrt(2.0 * x / N) * p.beta,
    }


def _rate_terms(p: ConcentrationParams, N: int):
    root2r = math.sqrt(2.0) * p.r / math.sqrt(N)
    return (
        ((p.b_star * p.sigma_bar + root2r) ** 2, 2.0 * p.r + p.b_star / 3.0),
        ((p.beta + root2r) ** 2, 2.0 * p.r),
    )


def _rate(lam: float, variance: float, slope: float) -> float:
    denom = variance + lam * slope
    if denom == 0:
        if lam == 0:
            raise DegenerateRate("degenerate rate: zero deviation with zero variance term")
        return math.inf
    return 0.5 * lam * lam / denom


def bernstein_rates(p: ConcentrationParams, lam: float, N: int) -> Dict[str, float]:
    """Exponential rates (nats per particle) for ``[eta^N - eta](f) >= r/N + lam``."""
    lam = _nonneg("lambda", lam)
    (v1, s1), (v2, s2) = _rate_terms(p, N)
    return {"rate1": _rate(lam, v1, s1), "rate2": _rate(lam, v2, s2)}


def _invert_rate(x: float, N: int, variance: float, slope: float) -> float:
    # smallest lam with N * lam^2 / (2 (variance + lam slope)) >= x
    a = x * slope / N
    return a + math.sqrt(a * a + 2.0 * x * variance / N)


def bernstein_thresholds(p: ConcentrationParams, x: float, N: int) -> Dict[str, float]:
    """Deviation levels at confidence ``1 - exp(-x)`` obtained by inverting the two rates.

    ``eta`` entries are ``r/N + lam*``; ``V`` entries are ``sqrt(N)`` times those.
    """
    x = _nonneg("x", x)
    (v1, s1), (v2, s2) = _rate_terms(p, N)
    eta1 = p.r / N + _invert_rate(x, N, v1, s1)
    eta2 = p.r / N + _invert_rate(x, N, v2, s2)
    root_n = math.sqrt(N)
    return {"rate1_eta": eta1, "rate2_eta": eta2, "rate1": eta1 * root_n, "rate2": eta2 * root_n}


def certificates(p: ConcentrationParams, x: float, N: int, scale: str = "V") -> Dict[str, float]:
    """All four deviation levels in one scale (``"V"`` or ``"eta"``)."""
    ev = thm12_events(p, x, N)
    bt = bernstein_thresholds(p, x, N)
    if scale == "V":
        return {"bennett": ev["bennett"], "hoeffding": ev["hoeffding"],
                "bernstein1": bt["rate1"], "bernstein2": bt["rate2"]}
    if scale == "eta":
        return {"bennett": ev["bennett_eta"], "hoeffding": ev["hoeffding_eta"],
                "bernstein1": bt["rate1_eta"], "bernstein2": bt["rate2_eta"]}
    raise ValueError("scale must be 'V' or 'eta'")


def lemma53_bounds(p: TriangularArrayParams, x: float, N: int) -> Dict[str, float]:
    """Levels for ``T_n^N = S_n^N + R_n^N`` holding with probability ``>= 1 - exp(-x)``.

    ``bennett_5_4`` and ``hoeffding_5_5`` use the exact inverse conjugates;
    ``bernstein_5_6`` and ``bernstein_5_8`` are the explicit forms
    ``d + A x + sqrt(2 x B)`` obtained from the analytic upper bounds.
    """
    x = _nonneg("x", x)
    first = p.d * (1.0 + _eps0_inv(x))
    if p.c_bar_sq > 0:
        ben = first + N * p.c_bar_sq * p.b_star * _eps1_inv(x / (N * p.c_bar_sq))
    else:
        ben = first
    hoef = first + math.sqrt(p.delta_bar_sq * 2.0 * x * N)
    root2d = math.sqrt(2.0) * p.d
    a6 = 2.0 * p.d + p.b_star / 3.0
    b6 = (root2d + p.b_star * math.sqrt(p.c_bar_sq * N)) ** 2
    a8 = 2.0 * p.d
    b8 = (root2d + math.sqrt(p.delta_bar_sq * N)) ** 2
    return {
        "bennett_5_4": ben,
        "hoeffding_5_5": hoef,
        "bernstein_5_6": p.d + a6 * x + math.sqrt(2.0 * x * b6),
        "bernstein_5_8": p.d + a8 * x + math.sqrt(2.0 * x * b8),
    }


# ---------------------------------------------------------------------------
# Feynman-Kac parameters


@dataclass(frozen=True)
class UniformFKParams:
    """Horizon-uniform parameters under the mixing condition."""

    params: ConcentrationParams
    varpi: Dict[str, float]
    q_bound: float
    beta_p_bounds: Sequence[float] = field(default_factory=tuple)

    def dphi_bounds(self) -> np.ndarray:
        """``2 q beta(P_{p,n})`` for ``p = 0..n``."""
        return 2.0 * self.q_bound * np.asarray(self.beta_p_bounds)


def fk_uniform_params(mix: MixingParams, sigma_sq: float = BOUND_MODE_SIGMA_SQ, horizon: int = 0) -> UniformFKParams:
    """Parameters valid for every horizon, plus per-pair bounds for the given one."""
    if not 0 <= sigma_sq <= 1:
        raise ValueError("sigma_sq must lie in [0, 1]")
    table = {f"{k},{l}": mix.varpi(k, l) for k in range(4) for l in (1, 2)}
    params = ConcentrationParams(
        r=4.0 * mix.varpi(3, 1),
        sigma_bar_sq=4.0 * mix.varpi(2, 2) * sigma_sq,
        beta_sq=4.0 * mix.varpi(2, 2),
        b_star=2.0 * mix.delta_m / mix.eps_m,
    )
    rho = mix.contraction
    beta_p = tuple(rho ** ((horizon - p) // mix.m) for p in range(horizon + 1))
    return UniformFKParams(params, table, mix.delta_m / mix.eps_m, beta_p)


def cor42_uniform_bounds(mix: MixingParams, sigma_sq: float, x: float, N: int) -> Dict[str, float]:
    """Horizon-uniform levels for ``[eta_n^N - eta_n](f)``."""
    x = _nonneg("x", x)
    w31, w22 = mix.varpi(3, 1), mix.varpi(2, 2)
    first = 4.0 / N * w31 * (1.0 + _eps0_inv(x))
    if sigma_sq > 0:
        ben = first + 8.0 * mix.delta_m / mix.eps_m * w22 * sigma_sq * _eps1_inv(x / (4.0 * sigma_sq * w22 * N))
    else:
        ben = first
    return {"bennett": ben, "hoeffding": first + 2.0 * math.sqrt(2.0 * w22 * x / N)}


def _path_extreme_products(g: np.ndarray, adjacency: np.ndarray, length: int):
    # max / min of prod_{p < length} g(x_p) over admissible paths
    hi, lo = g.copy(), g.copy()
    for _ in range(length - 1):
        hi = g * np.where(adjacency, hi[None, :], -np.inf).max(axis=1)
        lo = g * np.where(adjacency, lo[None, :], np.inf).min(axis=1)
    return hi.max(), lo.min()


def mixing_params(model, m: int = 1) -> MixingParams:
    """Exact ``(eps_m, delta_m, delta_{m-1})`` of a time-homogeneous Feynman-Kac model."""
    if not model.time_homogeneous:
        raise ModelError("mixing constants are defined for time-homogeneous models")
    mut = model.mutation(1)
    g = model.potential(0)
    mm = np.linalg.matrix_power(mut, m)
    num, den = mm[:, None, :], mm[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, np.inf)
    eps = float(min(1.0, ratio.min()))
    if eps <= 0:
        raise ModelError(f"mixing condition fails for m = {m}")
    adj = mut > 0

    def delta(length):
        if length == 0:
            return 1.0
        hi, lo = _path_extreme_products(g, adj, length)
        return float(hi / lo)

    return MixingParams(m, eps, delta(m), delta(m - 1))


def fk_model_params(model, horizon: int, sigma_sq: float = BOUND_MODE_SIGMA_SQ) -> ConcentrationParams:
    """Finite-horizon parameters from the exact semigroup constants of a Feynman-Kac model.

    Uses ``beta(D Phi_{p,n}) <= 2 q_{p,n} beta(P_{p,n})`` and
    ``delta(R^{Phi_{p,n}}) <= 4 q_{p,n}^3 beta(P_{p,n})`` for ``p < n``, and the
    identity values ``(1, 0)`` at ``p = n``. Without interaction (constant
    potentials) ``Phi_{p,n}`` is linear: ``r = 0`` and ``beta(D Phi_{p,n}) = beta(P_{p,n})``.
    """
    if not 0 <= sigma_sq <= 1:
        raise ValueError("sigma_sq must lie in [0, 1]")
    interacting = model.is_interacting(horizon)
    dphi, rem = [], []
    for p in range(horizon + 1):
        if p == horizon:
            dphi.append(1.0)
            rem.append(0.0)
            continue
        q, beta_p = model.semigroup_constants(p, horizon)
        if interacting:
            dphi.append(2.0 * q * beta_p)
            rem.append(4.0 * q**3 * beta_p)
        else:
            dphi.append(beta_p)
            rem.append(0.0)
    dphi = np.asarray(dphi)
    return ConcentrationParams(
        r=float(np.sum(rem)),
        sigma_bar_sq=float(sigma_sq * np.sum(dphi**2)),
        beta_sq=float(np.sum(dphi**2)),
        b_star=float(dphi.max()),
    )


# ---------------------------------------------------------------------------
# gas and Gaussian models


def model_regularity_params(model, c_prime: Optional[float] = None) -> Dict[str, float]:
    """One-step bounds ``beta(D Phi)`` and ``delta(R^Phi)`` for gas and Gaussian models."""
    if hasattr(model, "collision_oscillation"):
        beta_m = model.post_collision_dobrushin()
        osc = model.collision_oscillation()
        return {"beta_dphi": beta_m * (1.0 + osc), "delta_r": beta_m * osc}
    if hasattr(model, "drift_b"):
        if model.decoupled:
            # the remainder vanishes identically without interaction
            return {"beta_dphi": 1.0, "delta_r": 0.0}
        if c_prime is None:
            raise ModelError("constant C′ required for the Gaussian remainder bound")
        c_norm = model.drift_c.sup_norm
        osc_b = model.drift_b.oscillation
        return {"beta_dphi": 1.0 + c_norm * osc_b, "delta_r": float(c_prime) * osc_b * (2.0 * c_norm + osc_b)}
    raise ModelError(f"no regularity bounds for {type(model).__name__}")


def short_horizon_params(model, horizon: int, sigma_sq: float = BOUND_MODE_SIGMA_SQ,
                         c_prime: Optional[float] = None) -> ConcentrationParams:
    """Parameters for ``n <= 1`` from the one-step regularity bounds.

    Models without interaction (``delta(R^Phi) = 0`` and ``beta(D Phi) <= 1``)
    have a linear flow, so every horizon is covered: ``r = 0`` and each
    ``beta(D Phi_{p,n})`` is a Dobrushin coefficient, at most one.
    """
    if horizon == 0:
        return ConcentrationParams(0.0, sigma_sq, 1.0, 1.0)
    reg = model_regularity_params(model, c_prime)
    if reg["delta_r"] == 0.0 and reg["beta_dphi"] <= 1.0:
        return ConcentrationParams(0.0, sigma_sq * (horizon + 1), horizon + 1.0, 1.0)
    if horizon != 1:
        raise ModelError("one-step regularity bounds only cover horizons 0 and 1")
    b = reg["beta_dphi"]
    return ConcentrationParams(
        r=reg["delta_r"],
        sigma_bar_sq=sigma_sq * (b * b + 1.0),
        beta_sq=b * b + 1.0,
        b_star=max(b, 1.0),
    )


def model_params(model, horizon: int, sigma_sq: float = BOUND_MODE_SIGMA_SQ,
                 c_prime: Optional[float] = None) -> ConcentrationParams:
    """Best available parameters for any supported model."""
    if hasattr(model, "q_semigroup"):
        return fk_model_params(model, horizon, sigma_sq)
    return short_horizon_params(model, horizon, sigma_sq, c_prime)


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    mode: str
    lower_bound: bool

    def __float__(self):
        return self.value


def local_variance_sigma(model, n: int = 1, mode: str = "bound", mu_grid=None) -> SigmaEstimate:
    """Local variance parameter ``sigma_n^2``.

    ``bound`` mode returns 1/4, the largest conditional variance of a function
    with unit oscillation. ``exact`` mode maximizes over all ``{0, 1}``-valued
    functions and over ``mu_grid`` plus all Dirac measures; the sup over every
    measure is not computed, so the result is flagged as a lower bound.
    """
    if mode == "bound":
        return SigmaEstimate(BOUND_MODE_SIGMA_SQ, "bound", False)
    if mode != "exact":
        raise ValueError("mode must be 'bound' or 'exact'")
    s = getattr(model, "n_states", None)
    if s is None:
        raise ModelError("exact mode needs a finite-state model")
    if s > EXACT_MODE_MAX_STATES:
        raise ModelError(f"{s} states is too many for exact mode; use bound mode")
    mus = [np.eye(s)[i] for i in range(s)]
    if mu_grid is not None:
        mus.extend(np.asarray(mu, dtype=float) for mu in mu_grid)
    kernels = [(mu, model.kernel_matrix(mu, n)) for mu in mus]
    best = 0.0
    vertices = itertools.product((0.0, 1.0), repeat=s)
    while True:
        fs = np.array(list(itertools.islice(vertices, 1 << 16)))
        if fs.size == 0:
            break
        for mu, k in kernels:
            kf = fs @ k.T
            # binary f: K(f^2) = K(f)
            best = max(best, float(((kf - kf**2) @ mu).max()))
    return SigmaEstimate(best, "exact", True)
