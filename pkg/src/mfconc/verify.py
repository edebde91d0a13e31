"""Replicated Monte Carlo checks of the certificates and the CLT structure.

Replications are simulated concurrently, each on its own random stream, and
written into a preallocated array at their replication index. Every
statistic is then a numpy reduction over that array in replication order,
so reports are bit-identical for any thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bounds
from .errors import ModelError, OracleUnavailable
from .models.functions import Indicator
from .particles import SimulationConfig, replication_fields
from .reporting import format_cell

REPORT_SCHEMA_VERSION = 1
REPORT_COLUMNS = ("check", "generation", "function_id", "x_or_m", "empirical", "bound", "std_error", "pass")
CERTIFICATES = ("bennett", "hoeffding", "bernstein1", "bernstein2")

# seeds the default random test function, away from replication spawn keys
_TEST_FUNCTION_KEY = 2**32 - 1


def khintchine_constant(m: int) -> float:
    """``b(2m)^{2m} = 2^{-m} (2m)! / m!``, the ``2m``-th moment of a standard normal."""
    return math.factorial(2 * m) / (2**m * math.factorial(m))


def default_test_functions(model, master_seed: int = 0) -> List[Tuple[str, Any]]:
    """State indicators plus one seeded random ``+-1/2`` function (finite models).

    Gaussian models get the indicators of ``(-inf, 0]`` and ``[-1, 1]``.
    """
    if not hasattr(model, "n_states"):
        return [("ind_le_0", Indicator(hi=0.0)), ("ind_pm1", Indicator(-1.0, 1.0))]
    s = model.n_states
    out = [(f"ind_{i}", np.eye(s)[i]) for i in range(s)]
    rng = np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(_TEST_FUNCTION_KEY,)))
    out.append(("rand_pm", rng.choice([-0.5, 0.5], size=s)))
    return out


@dataclass
class ExperimentSpec:
    """What to simulate and how strictly to judge it.

    Parameters
    ----------
    model
        Any model exposing the particle interface.
    N, horizon, replications
        Particle count, last generation and number of replications R.
    functions
        ``(id, f)`` pairs with ``osc(f) <= 1``; defaults to
        :func:`default_test_functions`.
    x_grid
        Confidence levels for the exceedance check.
    generations
        Generations examined; defaults to ``0..horizon``.
    params
        Certificate parameters: a ``ConcentrationParams`` for every
        generation or a dict keyed by generation. Computed from the model
        when omitted (not possible for gas models beyond one step).
    """

    model: Any
    N: int
    horizon: int
    replications: int
    functions: Optional[List[Tuple[str, Any]]] = None
    x_grid: Sequence[float] = (0.5, 1.0, 2.0, 3.0)
    master_seed: int = 0
    generations: Optional[Sequence[int]] = None
    threads: Optional[int] = None
    params: Any = None
    sigma_sq: float = bounds.BOUND_MODE_SIGMA_SQ
    c_prime: Optional[float] = None
    exceedance_sigmas: float = 3.0
    variance_rtol: float = 0.1
    n0_rtol: Optional[float] = None
    covariance_sigmas: float = 4.0
    khintchine_rse: float = 4.0
    moments: Sequence[int] = (1, 2, 3)
    max_lag: int = 3

    def __post_init__(self):
        if self.N < 1 or self.horizon < 0:
            raise ValueError("need N >= 1 and horizon >= 0")
        if self.replications < 100:
            raise ValueError("statistical checks need at least 100 replications")
        if self.functions is None:
            self.functions = default_test_functions(self.model, self.master_seed)
        for fid, f in self.functions:
            osc = _oscillation(f)
            if osc > 1.0 + 1e-12:
                raise ValueError(f"test function {fid} has oscillation {osc} > 1")
        if self.generations is None:
            self.generations = tuple(range(self.horizon + 1))
        if any(not 0 <= n <= self.horizon for n in self.generations):
            raise ValueError("generations must lie in 0..horizon")

    @property
    def function_ids(self) -> List[str]:
        return [fid for fid, _ in self.functions]

    def params_for(self, n: int) -> bounds.ConcentrationParams:
        if isinstance(self.params, bounds.ConcentrationParams):
            return self.params
        if isinstance(self.params, dict) and n in self.params:
            return self.params[n]
        try:
            return bounds.model_params(self.model, n, self.sigma_sq, self.c_prime)
        except ModelError as exc:
            raise ModelError(f"no certificate parameters for generation {n}: {exc}; supply params") from exc


def _oscillation(f) -> float:
    if hasattr(f, "oscillation") and not isinstance(f, np.ndarray):
        return float(f.oscillation)
    v = np.asarray(f, dtype=float)
    return float(v.max() - v.min())


@dataclass
class FieldSample:
    """``W``, ``V`` and conditional variances ``C``, each shaped ``(R, horizon + 1, n_functions)``."""

    W: np.ndarray
    V: np.ndarray
    C: np.ndarray
    flow_values: Optional[np.ndarray]


def _flow_values(model, horizon: int, functions) -> Optional[np.ndarray]:
    try:
        flow = model.exact_flow(horizon)
    except OracleUnavailable:
        return None
    return np.array([[model.flow_integral(flow[n], f) for _, f in functions] for n in range(horizon + 1)])


def default_threads() -> int:
    return os.cpu_count() or 1


def simulate_fields(spec: ExperimentSpec) -> FieldSample:
    """Run all replications of ``spec``; the result does not depend on ``spec.threads``."""
    fns = [f for _, f in spec.functions]
    flow_values = _flow_values(spec.model, spec.horizon, spec.functions)
    shape = (spec.replications, spec.horizon + 1, len(fns))
    W, V, C = np.empty(shape), np.empty(shape), np.empty(shape)

    def run(rep):
        cfg = SimulationConfig(spec.N, spec.horizon, spec.master_seed, rep)
        W[rep], V[rep], C[rep] = replication_fields(spec.model, cfg, fns, flow_values, with_condvar=True)

    threads = spec.threads or default_threads()
    if threads <= 1:
        for rep in range(spec.replications):
            run(rep)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(spec.replications), chunksize=max(1, spec.replications // (8 * threads))))
    return FieldSample(W, V, C, flow_values)


@dataclass
class ExperimentReport:
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, check, generation, function_id, x_or_m, empirical, bound, std_error, passed, **extra):
        row = {
            "check": check,
            "generation": generation,
            "function_id": function_id,
            "x_or_m": x_or_m,
            "empirical": float(empirical),
            "bound": float(bound),
            "std_error": float(std_error),
            "pass": bool(passed),
        }
        row.update(extra)
        self.rows.append(row)

    def extend(self, other: "ExperimentReport") -> "ExperimentReport":
        self.rows.extend(other.rows)
        return self

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)

    def failures(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if not r["pass"]]

    def select(self, prefix: str) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r["check"].startswith(prefix)]

    def to_json(self) -> str:
        doc = {"schema_version": REPORT_SCHEMA_VERSION, "passed": self.passed, "rows": self.rows}
        return json.dumps(doc, indent=2, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in self.rows:
            writer.writerow([format_cell(r[c]) for c in REPORT_COLUMNS])
        return buf.getvalue()


def _fields(spec, fields):
    return simulate_fields(spec) if fields is None else fields


def exceedance_experiment(spec: ExperimentSpec, fields: Optional[FieldSample] = None) -> ExperimentReport:
    """Frequency of ``V_n^N(f)`` exceeding each certificate, against ``exp(-x)``."""
    fields = _fields(spec, fields)
    if fields.flow_values is None:
        raise OracleUnavailable("exceedance needs an exact flow oracle")
    R = spec.replications
    report = ExperimentReport()
    for n in spec.generations:
        params = spec.params_for(n)
        for x in spec.x_grid:
            levels = bounds.certificates(params, x, spec.N, "V")
            target = math.exp(-x)
            for j, fid in enumerate(spec.function_ids):
                v = fields.V[:, n, j]
                for name in CERTIFICATES:
                    freq = float(np.count_nonzero(v > levels[name])) / R
                    se = math.sqrt(freq * (1.0 - freq) / R)
                    report.add(f"exceedance:{name}", n, fid, float(x), freq, target, se,
                               freq <= target + spec.exceedance_sigmas * se, level=levels[name])
    return report


def clt_target_variance(model, n: int, f) -> float:
    """Asymptotic variance ``sum_p E(W_p[D_{eta_p} Phi_{p,n} f]^2)`` along the exact flow."""
    if not hasattr(model, "first_order_operator"):
        raise ModelError("the CLT target is computed for finite Feynman-Kac models only")
    flow = model.exact_flow(n)
    total = 0.0
    for p in range(n + 1):
        g = model.first_order_operator(flow[p].weights, p, n, f)
        if p == 0:
            total += model.flow_variance(flow[0], g)
        else:
            eta = flow[p - 1].weights
            k = model.kernel_matrix(eta, p)
            kg = k @ g
            total += float(eta @ (((g[None, :] - kg[:, None]) ** 2) * k).sum(axis=1))
    return total


def _variance_with_se(x: np.ndarray):
    var = float(np.var(x, ddof=1))
    centered = (x - x.mean()) ** 2
    return var, float(np.std(centered, ddof=1) / math.sqrt(x.size))


def clt_variance_check(spec: ExperimentSpec, fields: Optional[FieldSample] = None) -> ExperimentReport:
    """Empirical ``Var V_n^N(f)`` against the exact asymptotic variance."""
    fields = _fields(spec, fields)
    R = spec.replications
    n0_tol = spec.n0_rtol if spec.n0_rtol is not None else 2.0 * math.sqrt(2.0 / R)
    report = ExperimentReport()
    for n in spec.generations:
        for j, (fid, f) in enumerate(spec.functions):
            emp, se = _variance_with_se(fields.V[:, n, j])
            target = clt_target_variance(spec.model, n, f)
            ratio = emp / target if target > 0 else (1.0 if emp == 0 else math.inf)
            # small R: the fixed tolerance would sit inside the sampling noise
            tol = max(spec.variance_rtol, spec.covariance_sigmas * se / target) if target > 0 else spec.variance_rtol
            report.add("clt:variance", n, fid, "", emp, target, se,
                       abs(ratio - 1.0) <= tol, ratio=ratio, tolerance=tol)
            if n == 0:
                closed = spec.model.initial_variance_of(f)
                ratio0 = emp / closed if closed > 0 else (1.0 if emp == 0 else math.inf)
                report.add("clt:n0_closed_form", 0, fid, "", emp, closed, se,
                           abs(ratio0 - 1.0) <= n0_tol, ratio=ratio0, tolerance=n0_tol)
    return report


def exact_w_variance(model, n: int, f, flow=None) -> float:
    """``eta_{n-1} K[(f - K f)^2]`` along the exact flow (``Var_{eta_0}(f)`` at ``n = 0``)."""
    flow = model.exact_flow(n) if flow is None else flow
    if n == 0:
        return model.flow_variance(flow[0], f)
    eta = flow[n - 1].weights
    k = model.kernel_matrix(eta, n)
    v = np.asarray(f, dtype=float)
    kf = k @ v
    return float(eta @ (((v[None, :] - kf[:, None]) ** 2) * k).sum(axis=1))


def wfield_covariance_check(spec: ExperimentSpec, fields: Optional[FieldSample] = None) -> ExperimentReport:
    """Diagonal ``E W_p(f)^2`` against its exact value, cross-time covariances against 0.

    Finite models use the exact flow; Gaussian models use the replication
    average of the realized conditional variances, which has the same mean.
    """
    fields = _fields(spec, fields)
    R = spec.replications
    last = min(spec.horizon, spec.max_lag)
    finite = hasattr(spec.model, "n_states")
    flow = spec.model.exact_flow(last) if finite else None
    k = spec.covariance_sigmas
    report = ExperimentReport()
    for j, (fid, f) in enumerate(spec.functions):
        w = fields.W[:, : last + 1, j]
        centered = w - w.mean(axis=0)
        for p in range(last + 1):
            prod = centered[:, p] * centered[:, p]
            emp = float(prod.sum() / (R - 1))
            se = float(np.std(prod, ddof=1) / math.sqrt(R))
            if finite:
                target = exact_w_variance(spec.model, p, f, flow)
            else:
                target = float(np.mean(fields.C[:, p, j]))
            report.add("wfield:diagonal", str(p), fid, "", emp, target, se, abs(emp - target) <= k * se)
            for q in range(p + 1, last + 1):
                prod = centered[:, p] * centered[:, q]
                emp = float(prod.sum() / (R - 1))
                se = float(np.std(prod, ddof=1) / math.sqrt(R))
                report.add("wfield:cross", f"{p}:{q}", fid, "", emp, 0.0, se, abs(emp) <= k * se)
    return report


def khintchine_check(spec: ExperimentSpec, fields: Optional[FieldSample] = None) -> ExperimentReport:
    """Empirical ``E|W_n^N(f)|^{2m}`` against ``b(2m)^{2m}``."""
    fields = _fields(spec, fields)
    R = spec.replications
    report = ExperimentReport()
    for n in spec.generations:
        for j, fid in enumerate(spec.function_ids):
            a = np.abs(fields.W[:, n, j])
            for m in spec.moments:
                powers = a ** (2 * m)
                emp = float(powers.mean())
                se = float(np.std(powers, ddof=1) / math.sqrt(R))
                rse = se / emp if emp > 0 else 0.0
                bound = khintchine_constant(m)
                report.add("khintchine", n, fid, m, emp, bound, se, emp <= bound * (1.0 + spec.khintchine_rse * rse))
    return report


CHECKS = {
    "exceedance": exceedance_experiment,
    "clt": clt_variance_check,
    "wfield": wfield_covariance_check,
    "khintchine": khintchine_check,
}


def applicable_checks(model) -> List[str]:
    has_oracle = True
    try:
        model.exact_flow(0)
    except OracleUnavailable:
        has_oracle = False
    out = ["exceedance"] if has_oracle else []
    if hasattr(model, "first_order_operator"):
        out.append("clt")
    out.extend(["wfield", "khintchine"])
    return out


def run_checks(spec: ExperimentSpec, checks: Optional[Sequence[str]] = None) -> ExperimentReport:
    """Simulate once and run the requested checks on the shared replications."""
    checks = applicable_checks(spec.model) if checks is None else list(checks)
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks {sorted(unknown)}")
    fields = simulate_fields(spec)
    report = ExperimentReport()
    for name in checks:
        report.extend(CHECKS[name](spec, fields))
    return report
