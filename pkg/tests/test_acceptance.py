"""Acceptance criteria 1-10, one test each.

Every test prints a single ``criterion k: PASS|FAIL`` line with the measured
quantity next to its tolerance, then asserts. Run with ``pytest -s`` or
``python tests/test_acceptance.py`` to see the lines.
"""
import math
import time

import numpy as np
import pytest

from mfconc import bounds
from mfconc.bounds import ConcentrationParams, MixingParams, bernstein_rates, certificates, fk_uniform_params
from mfconc.convex import ALPHA0, ALPHA1, MAX_ITERATIONS, bisect_oracle, conjugate_eval, inverse
from mfconc.models import exact_flow, two_state_example, two_velocities
from mfconc.particles import SimulationConfig, cloud_integral, iterate_states, make_rng
from mfconc.verify import (
    ExperimentSpec,
    clt_target_variance,
    clt_variance_check,
    exceedance_experiment,
    khintchine_check,
    run_checks,
    simulate_fields,
    wfield_covariance_check,
)

GRID = np.logspace(-6, 3, 50)
XS = (0.5, 1.0, 2.0, 3.0)
INDICATORS = [("ind_0", np.array([1.0, 0.0])), ("ind_1", np.array([0.0, 1.0]))]


def _line(k, ok, detail, capsys=None):
    text = f"criterion {k}: {'PASS' if ok else 'FAIL'} | {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + text)
    else:
        print(text)
    return ok


@pytest.fixture(scope="module")
def big_fields():
    """R = 10^4 replications of the 2-state model, N = 10^4, generations 0..3."""
    spec = ExperimentSpec(two_state_example(), N=10_000, horizon=3, replications=10_000,
                          functions=INDICATORS + [("centered", np.array([-0.5, 0.5]))], master_seed=2024)
    t0 = time.perf_counter()
    fields = simulate_fields(spec)
    return spec, fields, time.perf_counter() - t0


def test_criterion_01_legendre_brackets(capsys):
    t0 = time.perf_counter()
    worst_gap, max_iter, inside = 0.0, 0, True
    for fid in (ALPHA0, ALPHA1):
        for x in GRID:
            res = inverse(fid, x)
            r = math.sqrt(x)
            lo, hi = (math.sqrt(2 * x), math.sqrt(2 * x) + x / 3) if fid is ALPHA1 else (2 * r + 4 * x / 3, 2 * r + 2 * x)
            inside &= lo <= res.value <= hi
            worst_gap = max(worst_gap, abs(res.value - bisect_oracle(fid, x)))
            max_iter = max(max_iter, res.iterations)
    elapsed = time.perf_counter() - t0
    ok = inside and worst_gap <= 1e-9 and max_iter <= MAX_ITERATIONS and elapsed < 1.0
    _line(1, ok, f"in brackets={inside}, max |newton-bisection|={worst_gap:.2e} (<=1e-9), "
                 f"max iterations={max_iter} (<=60), {elapsed:.3f}s (<1s)", capsys)
    assert ok


def test_criterion_02_conjugacy_round_trip(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for fid in (ALPHA0, ALPHA1):
        for x in GRID:
            worst = max(worst, abs(conjugate_eval(fid, inverse(fid, x).value) - x) / max(1.0, x))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    _line(2, ok, f"max scaled residual={worst:.2e} (<=1e-10), {elapsed:.3f}s (<1s)", capsys)
    assert ok


def test_criterion_03_two_velocities(capsys):
    t0 = time.perf_counter()
    model = two_velocities(0.3)
    flow = exact_flow(model, 5)
    p, err = 0.3, 0.0
    for eta in flow:
        err = max(err, abs(eta.weights[1] - p))
        p = p * p + (1.0 - p) * (1.0 - p)
    head_ok = np.allclose([e.weights[1] for e in flow[:3]], [0.3, 0.58, 0.5128], atol=1e-15, rtol=0)
    target = flow[5].weights[1]
    plus = np.array([0.0, 1.0])
    reps, hits = 200, 0
    for rep in range(reps):
        *_, last = iterate_states(model, 100_000, 5, make_rng(33, rep))
        hits += abs(cloud_integral(model, last, plus) - target) <= 0.005
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-15 and head_ok and hits >= 0.99 * reps and elapsed < 30
    _line(3, ok, f"oracle error={err:.1e} (<=1e-15), eta_5(+1)={target:.6f}, within 0.005 in {hits}/{reps} "
                 f"(>=99%), {elapsed:.1f}s (<30s)", capsys)
    assert ok


def test_criterion_04_exceedance(capsys):
    t0 = time.perf_counter()
    spec = ExperimentSpec(two_state_example(), N=10_000, horizon=3, replications=2000,
                          functions=INDICATORS, x_grid=XS, master_seed=4)
    report = exceedance_experiment(spec)
    elapsed = time.perf_counter() - t0
    rows = report.rows
    worst = max(rows, key=lambda r: r["empirical"] - r["bound"] - 3 * r["std_error"])
    n_events = len(rows)
    ok = report.passed and n_events == 4 * 4 * 2 * 4 and elapsed < 120
    _line(4, ok, f"{n_events - len(report.failures())}/{n_events} events with freq <= e^-x + 3 SE; "
                 f"tightest: {worst['check']} n={worst['generation']} x={worst['x_or_m']} "
                 f"freq={worst['empirical']:.4f} vs {worst['bound']:.4f}, {elapsed:.1f}s (<120s)", capsys)
    assert ok


def test_criterion_05_clt_variance(big_fields, capsys):
    spec, fields, sim_time = big_fields
    t0 = time.perf_counter()
    worst, worst0 = 0.0, 0.0
    for n in (0, 1, 2):
        for j, (_, f) in enumerate(spec.functions):
            v = fields.V[:, n, j]
            emp = float(np.var(v, ddof=1))
            worst = max(worst, abs(emp / clt_target_variance(spec.model, n, f) - 1.0))
            if n == 0:
                worst0 = max(worst0, abs(emp / spec.model.initial_variance_of(f) - 1.0))
    elapsed = sim_time + time.perf_counter() - t0
    ok = worst <= 0.10 and worst0 <= 0.05 and elapsed < 180
    _line(5, ok, f"max |var ratio - 1|={worst:.4f} (<=0.10), n=0 closed form {worst0:.4f} (<=0.05), "
                 f"{elapsed:.1f}s (<180s)", capsys)
    assert ok


def test_criterion_06_wfield_structure(big_fields, capsys):
    spec, fields, sim_time = big_fields
    t0 = time.perf_counter()
    report = wfield_covariance_check(spec, fields)
    elapsed = sim_time + time.perf_counter() - t0
    diag, cross = report.select("wfield:diagonal"), report.select("wfield:cross")
    z = max(abs(r["empirical"] - r["bound"]) / r["std_error"] for r in report.rows)
    ok = report.passed and len(diag) == 4 * 3 and len(cross) == 6 * 3 and elapsed < 120
    _line(6, ok, f"{len(diag)} diagonal + {len(cross)} cross-time entries, max |z|={z:.2f} (<=4), "
                 f"{elapsed:.1f}s (<120s)", capsys)
    assert ok


def test_criterion_07_khintchine(big_fields, capsys):
    spec, fields, sim_time = big_fields
    t0 = time.perf_counter()
    report = khintchine_check(spec, fields)
    elapsed = sim_time + time.perf_counter() - t0
    by_m = {m: max(r["empirical"] for r in report.rows if r["x_or_m"] == m) for m in (1, 2, 3)}
    ok = report.passed and elapsed < 60
    _line(7, ok, "max E|W|^2m: " + ", ".join(f"m={m}: {v:.3f} (<= {b})" for (m, v), b in zip(by_m.items(), (1, 3, 15)))
          + f" up to 4 relative SE, {elapsed:.1f}s (<60s)", capsys)
    assert ok


def test_criterion_08_parameter_algebra(capsys):
    t0 = time.perf_counter()
    mix = MixingParams(1, 0.5, 2.0, 1.0)
    uni = fk_uniform_params(mix)
    hand = 1 * (2.0 / 0.5) ** 2 / (1 - (1 - 0.5**2 / 1.0) ** 2)
    err = abs(uni.varpi["2,2"] - hand)
    approx_ok = abs(uni.varpi["2,2"] - 36.5714) < 5e-5
    bstar_ok = uni.params.b_star <= 8.0 + 1e-12
    rng = np.random.default_rng(8)
    violations = 0
    for _ in range(2000):
        m = int(rng.integers(1, 6))
        d_prev = 1.0 + 4.0 * rng.random()
        d = d_prev * (1.0 + 4.0 * rng.random())
        eps = rng.uniform(1e-3, min(1.0, math.sqrt(d_prev)))
        mp = MixingParams(m, eps, d, d_prev)
        for k in range(4):
            violations += mp.varpi(k, 1) > m * d_prev * d**k / eps ** (k + 2) * (1 + 1e-12)
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-12 and approx_ok and bstar_ok and violations == 0 and elapsed < 1.0
    _line(8, ok, f"varpi_22={uni.varpi['2,2']:.6f} (hand error {err:.1e}), b*={uni.params.b_star}, "
                 f"{violations} grid violations, {elapsed:.3f}s (<1s)", capsys)
    assert ok


def test_criterion_09_monotonicity_and_limits(capsys):
    t0 = time.perf_counter()
    xs = np.linspace(0.0, 10.0, 41)
    ns = [1, 10, 100, 10**4, 10**6, 10**8]
    param_sets = [
        ConcentrationParams(0.0, 0.25, 1.0, 1.0),
        bounds.fk_model_params(two_state_example(), 3),
        fk_uniform_params(MixingParams(1, 0.5, 2.0, 1.0)).params,
    ]
    mono = True
    for p in param_sets:
        table = np.array([[list(certificates(p, x, n, "eta").values()) for x in xs] for n in ns])
        mono &= bool(np.all(np.diff(table, axis=1) >= -1e-15 * np.abs(table[:, 1:])))
        mono &= bool(np.all(np.diff(table, axis=0) <= 1e-15 * np.abs(table[:-1])))
    p0 = ConcentrationParams(0.0, 0.3, 2.0, 1.5)
    exact = all(certificates(p0, x, n, "eta")["hoeffding"] == math.sqrt(2 * x / n) * p0.beta
                for x in xs for n in ns)
    lam, N = 1e-3, 10**8
    ratio = bernstein_rates(p0, lam, N)["rate1"] * 2 * (p0.b_star * p0.sigma_bar) ** 2 / lam**2
    elapsed = time.perf_counter() - t0
    ok = mono and exact and abs(ratio - 1) <= 0.02 and elapsed < 1.0
    _line(9, ok, f"monotone={mono}, r=0 Hoeffding exact={exact}, rate1 ratio={ratio:.5f} (within 2%), "
                 f"{elapsed:.3f}s (<1s)", capsys)
    assert ok


def test_criterion_10_thread_determinism(capsys):
    t0 = time.perf_counter()
    bodies = []
    for threads in (1, 2, 8):
        spec = ExperimentSpec(two_state_example(), N=2000, horizon=3, replications=500, master_seed=10,
                              threads=threads)
        csv_text = run_checks(spec).to_csv()
        bodies.append(csv_text.split("\n", 1)[1])
    elapsed = time.perf_counter() - t0
    same = all(b == bodies[0] for b in bodies)
    ok = same and elapsed < 60
    _line(10, ok, f"CSV bodies identical for threads 1, 2, 8: {same} ({len(bodies[0].splitlines())} rows), "
                  f"{elapsed:.1f}s (<60s)", capsys)
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
