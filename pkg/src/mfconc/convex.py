"""Legendre-Fenchel transforms of the two convex functions behind the certificates.

``alpha0(t) = -t - log(1 - 2t) / 2`` on ``[0, 1/2)`` and
``alpha1(t) = e^t - 1 - t`` on ``[0, inf)`` have conjugates

    eps0(lam) = (lam - log(1 + lam)) / 2
    eps1(lam) = (1 + lam) log(1 + lam) - lam

The certificates need the inverses ``eps^{-1}(x)``. They are computed by the
fixed-point iteration ``z <- F(z)`` with ``F(z) = (alpha(g(z)) + x) / g(z)``
and ``g = (alpha')^{-1}``, started above the root so that the iterates
decrease to it. ``F`` has a critical point at the root, so convergence is
quadratic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List

import numpy as np

MAX_ITERATIONS = 60
STEP_TOL = 1e-14
RESIDUAL_TOL = 1e-10
UNDERFLOW_X = 1e-300
_SERIES_CUTOFF = 0.05


class ConvexFunctionId(str, enum.Enum):
    ALPHA0 = "ALPHA0"
    ALPHA1 = "ALPHA1"


ALPHA0 = ConvexFunctionId.ALPHA0
ALPHA1 = ConvexFunctionId.ALPHA1


def _as_id(fid) -> ConvexFunctionId:
    return fid if isinstance(fid, ConvexFunctionId) else ConvexFunctionId(str(fid).upper())


def _z_minus_log1p(z: float) -> float:
    """``z - log(1 + z)`` without cancellation near 0."""
    if abs(z) < _SERIES_CUTOFF:
        # sum_{k>=2} (-1)^k z^k / k
        total, term = 0.0, z
        for k in range(2, 30):
            term *= -z
            total += -term / k
        return total
    return z - math.log1p(z)


def alpha(fid, t: float) -> float:
    fid = _as_id(fid)
    if t < 0:
        raise ValueError("alpha is defined on t >= 0")
    if fid is ALPHA0:
        if t >= 0.5:
            return math.inf
        return 0.5 * _z_minus_log1p(-2.0 * t)
    return math.expm1(t) - t


def alpha_prime_inverse(fid, z: float) -> float:
    """``(alpha')^{-1}(z)``: ``log(1+z)`` for ALPHA1, ``z / (2 + 2z)`` for ALPHA0."""
    if _as_id(fid) is ALPHA0:
        return z / (2.0 + 2.0 * z)
    return math.log1p(z)


def conjugate_eval(fid, lam: float) -> float:
    """Closed-form ``alpha*(lam)``, i.e. ``eps0`` or ``eps1``."""
    fid = _as_id(fid)
    lam = float(lam)
    if not lam >= 0:
        raise ValueError(f"conjugate is defined for lambda >= 0, got {lam}")
    if math.isinf(lam):
        return math.inf
    if fid is ALPHA0:
        return 0.5 * _z_minus_log1p(lam)
    if lam < _SERIES_CUTOFF:
        # sum_{k>=2} (-1)^k lam^k / (k (k-1))
        total, term = 0.0, lam
        for k in range(2, 30):
            term *= -lam
            total += -term / (k * (k - 1))
        return total
    return (1.0 + lam) * math.log1p(lam) - lam


def brackets(fid, x: float):
    """Analytic ``(lower, upper)`` bounds on ``(alpha*)^{-1}(x)``."""
    fid = _as_id(fid)
    r = math.sqrt(x)
    if fid is ALPHA1:
        return math.sqrt(2.0 * x), math.sqrt(2.0 * x) + x / 3.0
    return 2.0 * r + 4.0 * x / 3.0, 2.0 * r + 2.0 * x


def newton_map(fid, x: float, z: float) -> float:
    """``F(z)``; its unique fixed point is ``(alpha*)^{-1}(x)``."""
    fid = _as_id(fid)
    lz = math.log1p(z)
    if fid is ALPHA1:
        return (x + _z_minus_log1p(z)) / lz
    return 2.0 * x + lz + (2.0 * x - _z_minus_log1p(z)) / z


def refined_upper(fid, x: float) -> float:
    """One Newton step from the upper bracket, a sharper upper bound than the bracket."""
    if x <= 0:
        return 0.0
    return newton_map(fid, x, brackets(fid, x)[1])


@dataclass(frozen=True)
class InverseResult:
    value: float
    lower: float
    upper: float
    iterations: int
    converged: bool


def newton_iterates(fid, x: float, max_iter: int = MAX_ITERATIONS) -> List[float]:
    """Sequence ``z_0, z_1, ...`` from the upper bracket until the step test is met."""
    fid = _as_id(fid)
    z = brackets(fid, x)[1]
    out = [z]
    for _ in range(max_iter):
        z_next = newton_map(fid, x, z)
        if not z_next < z:
            # rounding noise once the iteration has settled
            break
        out.append(z_next)
        if z - z_next <= STEP_TOL * max(1.0, z_next):
            break
        z = z_next
    return out


def _bisect(fid, x: float, lo: float, hi: float) -> float:
    # run down to floating-point resolution; well inside 1e-12 absolute
    while hi - lo > 0:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if conjugate_eval(fid, mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _residual_ok(fid, x: float, z: float) -> bool:
    return abs(conjugate_eval(fid, z) - x) <= RESIDUAL_TOL * max(1.0, x)


def inverse(fid, x: float) -> InverseResult:
    """``(alpha*)^{-1}(x)`` by the monotone Newton iteration, with analytic brackets."""
    fid = _as_id(fid)
    x = float(x)
    if not x >= 0:
        raise ValueError(f"inverse is defined for x >= 0, got {x}")
    if x < UNDERFLOW_X:
        return InverseResult(0.0, 0.0, 0.0, 0, True)
    if math.isinf(x):
        return InverseResult(math.inf, math.inf, math.inf, 0, True)
    lower, upper = brackets(fid, x)
    iterates = newton_iterates(fid, x)
    z = min(max(iterates[-1], lower), upper)
    iterations = len(iterates) - 1
    if iterations < MAX_ITERATIONS and _residual_ok(fid, x, z):
        return InverseResult(z, lower, upper, iterations, True)
    # fallback: safe bisection inside the brackets
    z = _bisect(fid, x, lower, min(upper, iterates[-1]) if iterates[-1] >= lower else upper)
    return InverseResult(z, lower, upper, iterations, False)


def inverse_value(fid, x: float) -> float:
    return inverse(fid, x).value


def bisect_oracle(fid, x: float) -> float:
    """Plain bisection of the increasing map ``alpha*``, independent of the brackets."""
    fid = _as_id(fid)
    x = float(x)
    if not x >= 0:
        raise ValueError(f"inverse is defined for x >= 0, got {x}")
    if x == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while conjugate_eval(fid, hi) < x:
        lo, hi = hi, 2.0 * hi
    return _bisect(fid, x, lo, hi)


def scaled_inverse(fid, x: float, u: float, v: float) -> float:
    """Inverse conjugate of ``L(t) = u alpha(v t)``: ``u v (alpha*)^{-1}(x / u)``."""
    return u * v * inverse(fid, x / u).value


def bennett_mgf_middle(v: float, t: float) -> float:
    """``(v e^t + e^{-v t}) / (1 + v)``, the sharp MGF bound for ``Y <= 1`` with variance ``v``."""
    if v < 0 or t < 0:
        raise ValueError("v and t must be nonnegative")
    return (v * math.exp(t) + math.exp(-v * t)) / (1.0 + v)


def bennett_mgf_bound(v: float, t: float) -> float:
    """``exp(v alpha1(t))``, which dominates :func:`bennett_mgf_middle`."""
    if v < 0 or t < 0:
        raise ValueError("v and t must be nonnegative")
    return math.exp(v * alpha(ALPHA1, t))


def inverse_table(xs, ids=(ALPHA0, ALPHA1)):
    """Rows ``(x, id, value, lower, upper, iterations)`` for the legendre report."""
    rows = []
    for fid in ids:
        for x in np.atleast_1d(np.asarray(xs, dtype=float)):
            res = inverse(fid, float(x))
            rows.append((float(x), _as_id(fid).value, res.value, res.lower, res.upper, res.iterations))
    return rows
