"""Renewal-form tail constants, coupling-series weights, and their brackets."""

import math

import numpy as np
import pytest

from tritail.engine import SimConfig, backward_truncated
from tritail.errors import NonPositiveM, RegimeMismatch, TauNotContracting
from tritail.laws import Constant, LogNormal
from tritail.renewal import (
    RenewalConstant,
    coupled_component_constant,
    first_component_constant,
    series_weight,
    series_weight_bounds,
    univariate_constant,
)

from conftest import LAW_C2, LAW_C3, LAW_C4, assert_within_se, make_law

ROOT_HALF = 0.5 ** 0.5


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# univariate renewal constant
# ---------------------------------------------------------------------------

def test_univariate_constant_linear_case_is_exact():
    # At alpha = 1 the telescoped numerator is exactly B, so c = E B / m(1).
    a = LogNormal(-0.25, ROOT_HALF)  # root exactly 1
    b = Constant(1.0)
    g = rng(1)
    w = np.zeros(5000)
    for _ in range(300):
        w = a.sample(g, w.size) * w + 1.0
    est = univariate_constant(a, b, 1.0, w, g)
    # m(1) = E A log A = mu + sigma^2 = 0.25, hence c = 4 with zero variance.
    assert est.m_alpha == pytest.approx(0.25, rel=1e-12)
    assert est.c_hat == pytest.approx(4.0, rel=1e-12)
    assert est.std_error == pytest.approx(0.0, abs=1e-12)
    assert abs(est.cramer_residual) < 0.05
    assert est.naive_value is None


def test_univariate_constant_quadratic_oracle():
    # alpha = 2 telescopes to 2 E[A] E[W] + 1 over 2 m(2), all in closed form.
    a, b = LAW_C2.a4, LAW_C2.b2
    ea = math.exp(-0.25)
    oracle = (2.0 * ea / (1.0 - ea) + 1.0) / (2.0 * 0.5)
    n = 200_000
    w = backward_truncated(LAW_C2, SimConfig(burn_in=0, n_draws=n), rng(2)).w2
    est = univariate_constant(a, b, 2.0, w, rng(3))
    assert est.m_alpha == pytest.approx(0.5, rel=1e-12)
    assert abs(est.c_hat - oracle) <= max(6.0 * est.std_error, 0.08 * oracle)
    assert abs(est.cramer_residual) < 0.05
    assert est.n_samples == n
    assert est.tail_moment_ok


def test_univariate_constant_monte_carlo_normalizer():
    a, b = LAW_C2.a4, LAW_C2.b2
    w = backward_truncated(
        LAW_C2, SimConfig(burn_in=0, n_draws=100_000), rng(4)
    ).w2
    auto = univariate_constant(a, b, 2.0, w, rng(5))
    mc = univariate_constant(a, b, 2.0, w, rng(5), m_alpha_method="monte_carlo")
    assert mc.m_alpha == pytest.approx(0.5, rel=0.05)
    assert mc.c_hat == pytest.approx(auto.c_hat, rel=0.10)
    assert mc.std_error > 0.0


def test_univariate_constant_rejects_wrong_alpha():
    w = np.ones(1000)
    a = LAW_C2.a4  # root is 2; the normalizer at 0.5 is negative
    with pytest.raises(NonPositiveM):
        univariate_constant(a, Constant(1.0), 0.5, w, rng(6))
    with pytest.raises(NonPositiveM):
        univariate_constant(a, Constant(1.0), 0.5, w, rng(6),
                            m_alpha_method="monte_carlo")


def test_univariate_constant_validation():
    with pytest.raises(ValueError):
        univariate_constant(LAW_C2.a4, LAW_C2.b2, 2.0, np.ones(1), rng())
    with pytest.raises(ValueError):
        univariate_constant(LAW_C2.a4, LAW_C2.b2, -1.0, np.ones(100), rng())
    with pytest.raises(ValueError):
        univariate_constant(LAW_C2.a4, LAW_C2.b2, 2.0, np.ones(100), rng(),
                            m_alpha_method="bootstrap")


# ---------------------------------------------------------------------------
# first-component constant (own-multiplier regime)
# ---------------------------------------------------------------------------

def test_first_component_requires_lighter_own_tail():
    draws = backward_truncated(LAW_C3, SimConfig(burn_in=0, n_draws=100), rng(7))
    with pytest.raises(RegimeMismatch):
        first_component_constant(LAW_C3, 3.0, 1.5, draws, rng(8))


def test_first_component_prefactor_ratio_identity():
    # naive/renewal = 2 m(alpha1) pathwise: both share the same numerator.
    draws = backward_truncated(LAW_C4, SimConfig(burn_in=0, n_draws=50_000), rng(9))
    est = first_component_constant(LAW_C4, 1.5, 3.0, draws, rng(10))
    assert est.naive_value is not None
    assert est.naive_value / est.c_hat == pytest.approx(2.0 * est.m_alpha, rel=1e-12)
    # For this law m(1.5) = 0.375, so the two candidates differ by 4/3.
    assert est.m_alpha == pytest.approx(0.375, rel=1e-12)
    assert est.alpha == 1.5
    assert est.c_hat > 0 and abs(est.cramer_residual) < 0.05


# ---------------------------------------------------------------------------
# coupling-series weights
# ---------------------------------------------------------------------------

def test_series_weight_single_term_is_coupling_moment():
    est = series_weight(LAW_C3, 1.5, s=1, n=100_000, rng=rng(11))
    target = math.exp(-0.75 + 0.5 * (1.5 * 0.5) ** 2)  # E A2^1.5
    assert_within_se(est.value, target, est.std_error, 3, "w_1")
    assert est.s == 1 and est.n_samples == 100_000


def test_series_weight_two_terms_brute_force():
    alpha2, n = 1.5, 200_000
    est = series_weight(LAW_C3, alpha2, s=2, n=n, rng=rng(12))
    # Independent re-derivation: term 1 = A2_1 * A4_2, term 2 = A1_1 * A2_2.
    g = rng(13)
    d1 = LAW_C3.sample(g, n)
    d2 = LAW_C3.sample(g, n)
    vals = (d1.a2 * d2.a4 + d1.a1 * d2.a2) ** alpha2
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(est.value - vals.mean()) <= 3.0 * (est.std_error + se)


def test_series_weight_deterministic_closed_form():
    a1, a2, a4, alpha2 = 0.6, 0.3, 0.5, 1.7
    law = make_law(Constant(a1), Constant(a2), Constant(a4))
    for s in (1, 3, 5):
        est = series_weight(law, alpha2, s=s, n=16, rng=rng(14))
        inner = sum(a1 ** (i - 1) * a2 * a4 ** (s - i) for i in range(1, s + 1))
        assert est.value == pytest.approx(inner**alpha2, rel=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-12)


def test_series_weight_validation():
    with pytest.raises(ValueError):
        series_weight(LAW_C3, 1.5, s=0, n=100, rng=rng())
    with pytest.raises(ValueError):
        series_weight(LAW_C3, 1.5, s=1, n=1, rng=rng())
    with pytest.raises(ValueError):
        series_weight(LAW_C3, -1.5, s=1, n=100, rng=rng())


# ---------------------------------------------------------------------------
# analytic weight bounds
# ---------------------------------------------------------------------------

def test_series_weight_bounds_heavy_branch():
    b = series_weight_bounds(LAW_C3, 1.5)
    ea2 = math.exp(-0.75 + 0.5 * (1.5 * 0.5) ** 2)
    tau = math.exp(1.5 * -0.375 + 0.5 * (1.5 * 0.5) ** 2)
    assert b.branch == "alpha2_gt_1"
    assert b.tau == pytest.approx(tau, rel=1e-12)
    assert b.ea2 == pytest.approx(ea2, rel=1e-12)
    assert b.lower == pytest.approx(ea2, rel=1e-12)
    assert b.upper == pytest.approx(
        (1.0 - tau ** (1.0 / 1.5)) ** -1.5 * ea2, rel=1e-12
    )


def test_series_weight_bounds_light_branch():
    law = make_law(LogNormal(-0.5, 0.3), LogNormal(-0.5, 0.5), LogNormal(-0.6, 0.3))
    alpha2 = 0.8
    b = series_weight_bounds(law, alpha2)
    tau = math.exp(0.8 * -0.5 + 0.5 * (0.8 * 0.3) ** 2)
    ea2 = math.exp(0.8 * -0.5 + 0.5 * (0.8 * 0.5) ** 2)
    pinch = (1.0 - tau ** (1.0 / alpha2)) ** -alpha2
    assert b.branch == "alpha2_le_1"
    assert b.lower == pytest.approx(pinch * ea2, rel=1e-12)
    assert b.upper == pytest.approx(ea2 / (1.0 - tau), rel=1e-12)
    assert b.lower <= b.upper


def test_series_weight_bounds_tau_not_contracting():
    law = make_law(LogNormal(0.0, 0.5), LogNormal(-0.5, 0.5), LogNormal(-0.6, 0.3))
    with pytest.raises(TauNotContracting):
        series_weight_bounds(law, 1.5)


def test_finite_s_upper_interpolates_to_the_limit():
    b = series_weight_bounds(LAW_C3, 1.5)
    uppers = [b.finite_s_upper(s) for s in (1, 2, 4, 16, 10**6)]
    assert uppers[0] == pytest.approx(b.ea2, rel=1e-12)
    assert all(x < y for x, y in zip(uppers, uppers[1:]))
    assert uppers[-1] == pytest.approx(b.upper, rel=1e-9)
    with pytest.raises(ValueError):
        b.finite_s_upper(0)


# ---------------------------------------------------------------------------
# inherited (coupled) constant
# ---------------------------------------------------------------------------

def fake_c2(c=2.0):
    return RenewalConstant(c_hat=c, std_error=0.1, m_alpha=0.5, alpha=1.7,
                           n_samples=10)


def test_coupled_constant_deterministic():
    # With A4 = 1 the inner sums are plain geometric series in A1, so the
    # weights converge to (a2/(1-a1))^alpha2 — exactly the analytic upper bound.
    law = make_law(Constant(0.3), Constant(0.4), Constant(1.0))
    res = coupled_component_constant(
        law, 1.7, fake_c2(), s_schedule=(4, 8, 16), n=8, rng=rng(15)
    )
    assert res.converged
    assert [t.s for t in res.trace] == [4, 8, 16]
    assert res.weight == res.trace[-1].value
    assert res.constant.c_hat == pytest.approx(2.0 * res.weight, rel=1e-12)
    bounds = series_weight_bounds(law, 1.7)
    assert bounds.lower <= res.weight <= bounds.upper
    assert res.weight == pytest.approx((0.4 / 0.7) ** 1.7, rel=1e-3)


def test_coupled_constant_nonconvergence_is_a_flag():
    law = make_law(Constant(0.9), Constant(0.4), Constant(0.9))
    res = coupled_component_constant(
        law, 1.7, fake_c2(), s_schedule=(1, 2, 3), n=8, rng=rng(16),
        rel_tol=1e-6,
    )
    assert not res.converged  # the trace is still growing at s = 3
    assert res.constant.c_hat == pytest.approx(2.0 * res.weight, rel=1e-12)


def test_coupled_constant_validation():
    with pytest.raises(ValueError):
        coupled_component_constant(LAW_C3, 1.5, fake_c2(), (4, 8), 8, rng())
    with pytest.raises(ValueError):
        coupled_component_constant(LAW_C3, 1.5, fake_c2(), (4, 4, 8), 8, rng())
    with pytest.raises(RegimeMismatch):
        coupled_component_constant(LAW_C3, 1.5, fake_c2(), (2, 4, 8), 8, rng(),
                                   alpha1=1.0)
