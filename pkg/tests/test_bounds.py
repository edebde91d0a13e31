import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfconc import bounds
from mfconc.bounds import (
    ConcentrationParams,
    MixingParams,
    TriangularArrayParams,
    bernstein_rates,
    bernstein_thresholds,
    certificates,
    cor42_uniform_bounds,
    fk_model_params,
    fk_uniform_params,
    lemma53_bounds,
    local_variance_sigma,
    mixing_params,
    model_regularity_params,
    short_horizon_params,
    thm12_events,
)
from mfconc.errors import DegenerateRate, ModelError
from mfconc.models import Constant, FeynmanKacModel, GaussianMeanFieldModel, Polynomial, Tanh, two_velocities
from mfconc.models.gas import McKeanGasModel

P = ConcentrationParams(r=2.0, sigma_bar_sq=0.5, beta_sq=3.0, b_star=1.5)
MIX = MixingParams(1, 0.5, 2.0, 1.0)


def test_x_zero_leaves_only_remainder():
    ev = thm12_events(P, 0.0, 100)
    assert ev["bennett"] == ev["hoeffding"] == P.r / 10
    tri = lemma53_bounds(TriangularArrayParams(3.0, 0.2, 1.0, 1.0), 0.0, 50)
    assert tri["bennett_5_4"] == tri["hoeffding_5_5"] == 3.0
    uni = cor42_uniform_bounds(MIX, 0.25, 0.0, 1000)
    assert uni["bennett"] == uni["hoeffding"] == pytest.approx(4 * MIX.varpi(3, 1) / 1000, rel=1e-15)


def test_rates_at_zero_and_degenerate():
    assert bernstein_rates(P, 0.0, 100) == {"rate1": 0.0, "rate2": 0.0}
    zero = ConcentrationParams(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(DegenerateRate):
        bernstein_rates(zero, 0.0, 100)
    assert bernstein_rates(zero, 0.1, 100)["rate1"] == math.inf


def test_rate1_without_remainder():
    p = ConcentrationParams(0.0, 0.5, 1.0, 2.0)
    lam = 0.3
    expected = lam**2 / (2 * ((p.b_star * p.sigma_bar) ** 2 + lam * p.b_star / 3))
    assert bernstein_rates(p, lam, 10**6)["rate1"] == pytest.approx(expected, rel=1e-14)


def test_rate1_asymptote_along_sqrt_scaling():
    p = ConcentrationParams(1.0, 0.5, 1.0, 2.0)
    ratios = []
    for N in (1e4, 1e6, 1e8, 1e10):
        lam = N**-0.5
        ratios.append(bernstein_rates(p, lam, N)["rate1"] * 2 * (p.b_star * p.sigma_bar) ** 2 / lam**2)
    assert all(abs(b - 1) < abs(a - 1) for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(1.0, abs=1e-4)


def test_thresholds_invert_rates():
    for x in (0.5, 2.0):
        for N in (100, 10_000):
            th = bernstein_thresholds(P, x, N)
            for k in (1, 2):
                lam = th[f"rate{k}_eta"] - P.r / N
                assert N * bernstein_rates(P, lam, N)[f"rate{k}"] == pytest.approx(x, rel=1e-10)
                assert th[f"rate{k}"] == pytest.approx(math.sqrt(N) * th[f"rate{k}_eta"])


def test_hoeffding_classical_limit():
    p = ConcentrationParams(0.0, 0.25, 2.0, 1.0)
    for x in (0.5, 3.0):
        for N in (10, 10**6):
            assert certificates(p, x, N, "eta")["hoeffding"] == pytest.approx(math.sqrt(2 * x / N) * p.beta,
                                                                               rel=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 5), st.floats(0, 2), st.floats(0, 5), st.floats(0, 5),
       st.floats(0.01, 10), st.floats(0.01, 10), st.integers(1, 10**7), st.integers(1, 10**7))
def test_certificates_monotone(r, s2, b2, bs, x1, x2, n1, n2):
    p = ConcentrationParams(r, s2, b2, bs)
    xa, xb = sorted((x1, x2))
    na, nb = sorted((n1, n2))
    lo, hi = certificates(p, xa, na, "eta"), certificates(p, xb, na, "eta")
    far = certificates(p, xa, nb, "eta")
    for k in lo:
        assert lo[k] <= hi[k] * (1 + 1e-12) + 1e-300
        assert far[k] <= lo[k] * (1 + 1e-12) + 1e-300


def test_triangular_array_recovers_events():
    tri = TriangularArrayParams.from_concentration(P)
    for x in (0.5, 1.0, 3.0):
        for N in (50, 10_000):
            ev, lm = thm12_events(P, x, N), lemma53_bounds(tri, x, N)
            bt = bernstein_thresholds(P, x, N)
            root = math.sqrt(N)
            assert lm["bennett_5_4"] == pytest.approx(root * ev["bennett"], rel=1e-13)
            assert lm["hoeffding_5_5"] == pytest.approx(root * ev["hoeffding"], rel=1e-13)
            # the explicit forms are sharper than the inverted rates they imply
            assert lm["bernstein_5_6"] <= root * bt["rate1"] * (1 + 1e-13)
            assert lm["bernstein_5_8"] <= root * bt["rate2"] * (1 + 1e-13)
            for key, rate in (("bernstein_5_6", "rate1"), ("bernstein_5_8", "rate2")):
                lam = lm[key] / N - P.r / N
                assert N * bernstein_rates(P, lam, N)[rate] <= x * (1 + 1e-12)


def test_explicit_bernstein_forms_dominate_exact_inverses():
    tri = TriangularArrayParams.from_sequences([-1, -0.5, -2], [1, 0.5, 1], [0.5, 0.3, 0.7], d=0.4)
    for x in np.linspace(0.01, 5, 30):
        lm = lemma53_bounds(tri, x, 10)
        assert lm["bennett_5_4"] <= lm["bernstein_5_6"] + 1e-12
        assert lm["hoeffding_5_5"] <= lm["bernstein_5_8"] + 1e-12


def test_triangular_from_sequences_validation():
    with pytest.raises(ValueError):
        TriangularArrayParams.from_sequences([0.5], [1.0], [0.1], 0.0)
    tri = TriangularArrayParams.from_sequences([-1, -1], [1, 2], [1, 1], 0.0)
    assert tri.b_star == 2 and tri.c_bar_sq == 0.5 and tri.delta_bar_sq == 1 + 2.25


def test_varpi_hand_values():
    uni = fk_uniform_params(MIX)
    assert MIX.varpi(2, 2) == pytest.approx(16 / (1 - 0.75**2), abs=1e-12)
    assert MIX.varpi(2, 2) == pytest.approx(36.5714, abs=1e-4)
    assert uni.params.b_star == 8.0
    assert uni.params.beta_sq == pytest.approx(4 * MIX.varpi(2, 2), rel=1e-15)
    assert uni.varpi["3,1"] == pytest.approx(64 / 0.25, rel=1e-15)


def test_mixing_params_of_two_state_model(fk2):
    mix = mixing_params(fk2, 1)
    assert (mix.eps_m, mix.delta_m, mix.delta_m_minus_1) == pytest.approx((0.5, 2.0, 1.0), abs=1e-15)
    mix2 = mixing_params(fk2, 2)
    m2 = np.array([[0.61, 0.39], [0.52, 0.48]])
    assert mix2.eps_m == pytest.approx((m2[:, None, :] / m2[None, :, :]).min(), rel=1e-14)
    assert mix2.delta_m == pytest.approx(4.0) and mix2.delta_m_minus_1 == pytest.approx(2.0)


def test_mixing_validation():
    with pytest.raises(ValueError):
        MixingParams(1, 0.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        MixingParams(0, 0.5, 2.0, 1.0)


def test_fk_params_identity_and_noninteracting(fk2):
    p0 = fk_model_params(fk2, 0)
    assert (p0.r, p0.beta_sq, p0.b_star) == (0.0, 1.0, 1.0)
    flat = FeynmanKacModel([[2.0, 2.0]], [[[0.7, 0.3], [0.4, 0.6]]], [0.0], [0.5, 0.5])
    p = fk_model_params(flat, 3)
    assert p.r == 0.0
    assert p.beta_sq == pytest.approx(sum(0.3 ** (2 * k) for k in range(4)), rel=1e-14)


def test_fk_params_within_uniform_bounds(fk2):
    uni = fk_uniform_params(mixing_params(fk2)).params
    for n in range(6):
        p = fk_model_params(fk2, n)
        assert p.r <= uni.r and p.beta_sq <= uni.beta_sq and p.b_star <= uni.b_star


def test_regularity_examples():
    reg = model_regularity_params(two_velocities(0.3))
    assert reg == {"beta_dphi": 3.0, "delta_r": 2.0}
    flat = McKeanGasModel(np.full((2, 2), 0.5), [1.0, 1.0], np.stack([np.eye(2), np.eye(2)[::-1]]), [0.5, 0.5])
    assert model_regularity_params(flat)["delta_r"] == 0.0
    dec = GaussianMeanFieldModel(Polynomial((0.0, 0.5)), Tanh(), Constant(0.0))
    assert model_regularity_params(dec) == {"beta_dphi": 1.0, "delta_r": 0.0}
    coupled = GaussianMeanFieldModel(Polynomial((0.0, 0.5)), Tanh(), Constant(0.3))
    with pytest.raises(ModelError, match="C′"):
        model_regularity_params(coupled)
    reg = model_regularity_params(coupled, c_prime=2.0)
    assert reg["beta_dphi"] == pytest.approx(1.6) and reg["delta_r"] == pytest.approx(2.0 * 2.0 * 2.6)


def test_short_horizon_limits():
    with pytest.raises(ModelError):
        short_horizon_params(two_velocities(0.3), 2)
    p = short_horizon_params(two_velocities(0.3), 1)
    assert p.r == 2.0 and p.beta_sq == 10.0 and p.b_star == 3.0


def test_local_variance_sigma(fk2):
    assert float(local_variance_sigma(fk2)) == 0.25
    est = local_variance_sigma(fk2, 1, "exact")
    assert est.lower_bound and est.value == pytest.approx(0.24, abs=1e-12)
    ident = FeynmanKacModel([[1.0, 1.0]], [np.eye(2)], [1.0], [0.5, 0.5])
    assert local_variance_sigma(ident, 1, "exact").value == 0.0
    big = FeynmanKacModel([np.ones(21)], [np.full((21, 21), 1 / 21)], [0.0], np.full(21, 1 / 21))
    with pytest.raises(ModelError):
        local_variance_sigma(big, 1, "exact")


def test_random_grid_varpi_inequality():
    rng = np.random.default_rng(0)
    for _ in range(500):
        m = int(rng.integers(1, 5))
        d_prev = 1 + 3 * rng.random()
        d = d_prev * (1 + 3 * rng.random())
        eps = rng.uniform(0.05, min(1.0, math.sqrt(d_prev)))
        mix = MixingParams(m, eps, d, d_prev)
        for k in range(4):
            assert mix.varpi(k, 1) <= m * d_prev * d**k / eps ** (k + 2) * (1 + 1e-12)


def test_decoupled_models_cover_every_horizon():
    dec = GaussianMeanFieldModel(Polynomial((0.0, 0.5)), Tanh(), Constant(0.0))
    p = short_horizon_params(dec, 4)
    assert (p.r, p.beta_sq, p.b_star) == (0.0, 5.0, 1.0)
    assert p.sigma_bar_sq == pytest.approx(1.25)
