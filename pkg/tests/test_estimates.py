import json

import numpy as np
import pytest

from semirel.estimates import (
    SAMPLE_POINTS,
    atilde,
    cordoba_check,
    kernel_bound_report,
    massive_estimate_report,
    weight_decay_report,
)
from semirel.fractional import kernel_weighted_l1
from semirel.spectral import ComplexField, make_grid


def bracket(x):
    return np.sqrt(1 + np.asarray(x) ** 2)


def test_sample_layout():
    x = SAMPLE_POINTS
    assert x[0] == 0 and x[-1] == pytest.approx(100.0)
    assert len(x) >= 200
    tail = x[x > 1]
    np.testing.assert_allclose(np.diff(np.log(tail)), np.diff(np.log(tail))[0], rtol=1e-9)


def test_weight_decay_one_dim_q2_closed_form():
    rep = weight_decay_report(1, 2)
    x = rep.samples
    np.testing.assert_allclose(rep.lhs, np.abs(1 - x**2) / (1 + x**2) ** 2, atol=1e-6)
    assert rep.regime == "q>n"
    assert rep.empirical_constant <= 1 + 1e-3
    assert rep.empirical_constant == pytest.approx(1.0, abs=1e-3)
    assert rep.extras["lhs_tail_slope"] == pytest.approx(-2.0, abs=0.1)
    assert rep.passed


@pytest.mark.parametrize("n", [2, 3])
def test_weight_decay_harmonic_extension_identity(n):
    # <x>^{1-n} restricted from the Laplace fundamental solution in R^{n+1}
    # gives (-Delta)^{1/2} <x>^{1-n} = (n-1) <x>^{-n-1}
    rep = weight_decay_report(n, n - 1)
    ref = (n - 1) * bracket(rep.samples) ** (-n - 1)
    np.testing.assert_allclose(rep.lhs, ref, rtol=1e-5, atol=1e-9)
    assert rep.regime == "q<n"


@pytest.mark.parametrize("n,q", [(2, 0.5), (3, 1.0)])
def test_weight_decay_generic_low_regime_slope(n, q):
    rep = weight_decay_report(n, q)
    assert rep.extras["lhs_tail_slope"] == pytest.approx(-(q + 1), abs=0.1)
    assert abs(rep.extras["ratio_tail_slope"]) < 0.1


def test_weight_decay_high_regime_slope():
    rep = weight_decay_report(3, 4)
    assert rep.extras["lhs_tail_slope"] == pytest.approx(-4.0, abs=0.1)


def test_weight_decay_log_correction():
    rep = weight_decay_report(1, 1)
    assert rep.regime == "q=n"
    x = rep.samples
    power_ratio = rep.lhs * bracket(x) ** 2
    # grows at least logarithmically without the correction
    assert power_ratio[-1] > 1.3 * power_ratio[np.searchsorted(x, 10)]
    assert rep.extras["power_ratio_tail_slope"] > 2 * rep.extras["ratio_tail_slope"]
    assert np.max(rep.ratio) == pytest.approx(rep.empirical_constant)


def test_weight_decay_validation():
    with pytest.raises(ValueError):
        weight_decay_report(4, 1)
    with pytest.raises(ValueError):
        weight_decay_report(1, 0)


def test_atilde_one_dim():
    # empirical A_{1,2} is 1 and ||<.>^2 K||_{L^1} = 1 + n = 2
    assert atilde(1) == pytest.approx(1.0 + 2.0 * 2.0, abs=1e-3)


def test_massive_massless_limit_remainder_vanishes():
    est = massive_estimate_report(1, 2, 0.0, 1.0)
    assert np.max(est.remainder.lhs) <= 1e-12
    assert est.passed


def test_massive_splitting_rhs_at_zero_mass():
    # the splitting bound is the massless lemma bound plus the remainder bound
    est = massive_estimate_report(1, 2, 0.0, 1.0)
    lemma = weight_decay_report(1, 2).lhs
    rem_rhs = 2.0 * kernel_weighted_l1(1, 2) * bracket(SAMPLE_POINTS) ** -2
    np.testing.assert_allclose(est.splitting.rhs_shape, lemma + rem_rhs, rtol=1e-14)
    np.testing.assert_allclose(est.splitting.lhs, lemma, atol=1e-4)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_massive_estimates_hold(m, R):
    est = massive_estimate_report(1, 2, m, R)
    for rep in est.reports:
        assert rep.passed, rep.estimate_id
        assert rep.extras["min_slack"] >= 0


def test_scaled_coefficient():
    est = massive_estimate_report(1, 2, 1.0, 2.0)
    assert est.scaled.extras["coefficient"] == pytest.approx(atilde(1) * 5 ** 1.5)


def test_remainder_monotone_in_mass():
    lhs = [massive_estimate_report(1, 2, m, 1.0).remainder.lhs for m in (0.0, 0.5, 1.0, 2.0)]
    for a, b in zip(lhs, lhs[1:]):
        assert np.all(b >= a - 1e-12)


def test_massive_rejects_small_q():
    with pytest.raises(ValueError, match="n/2"):
        massive_estimate_report(2, 1.0, 1.0, 1.0)


def test_massive_deterministic():
    a = massive_estimate_report(1, 2, 1.0, 1.0)
    b = massive_estimate_report(1, 2, 1.0, 1.0)
    for ra, rb in zip(a.reports, b.reports):
        assert np.array_equal(ra.lhs, rb.lhs) and ra.passed == rb.passed


@pytest.mark.parametrize("n", [1, 2, 3])
def test_kernel_envelopes(n):
    rep = kernel_bound_report(n)
    assert rep.passed
    assert np.isfinite(rep.extras["near_sup"]) and np.isfinite(rep.extras["far_sup"])
    if n == 3:
        assert np.max(rep.extras["near_r_pow_n_minus_1"]) < 1.0
    if n == 2:
        assert rep.extras["far_argmax"] == pytest.approx(2.0, abs=0.1)


def test_cordoba_gaussian_one_dim():
    rep = cordoba_check(1, lambda x: np.exp(-x**2))
    assert rep.passed
    assert rep.extras["min_margin"] >= -1e-8


def test_cordoba_zero_profile():
    rep = cordoba_check(1, lambda x: np.zeros_like(x))
    assert rep.passed
    assert np.all(rep.lhs == 0) and np.all(rep.rhs_shape == 0)


def test_cordoba_sign_changing():
    assert cordoba_check(1, lambda x: x * np.exp(-x**2)).passed


def test_cordoba_two_dim_field():
    g = make_grid(2, 20.0, 128)
    x, y = g.coords
    rep = cordoba_check(2, ComplexField(g, (x - y) * np.exp(-(x**2 + y**2) / 2)))
    assert rep.passed


def test_cordoba_rejections():
    g = make_grid(1, 10.0, 64)
    with pytest.raises(ValueError, match="real"):
        cordoba_check(1, ComplexField(g, 1j * np.exp(-g.axis**2)))
    with pytest.raises(ValueError):
        cordoba_check(3, lambda x, y, z: x)


def test_cordoba_not_vacuous():
    g = make_grid(1, 40.0, 1024)
    phi = np.exp(-g.axis**2)
    rep = cordoba_check(1, ComplexField(g, phi))
    excess = rep.lhs - rep.rhs_shape
    assert np.max(excess) <= 1e-8
    # equality fails strictly somewhere, so the check is not vacuous
    assert np.min(excess) < -1e-3


def test_report_serialization(tmp_path):
    rep = weight_decay_report(1, 2)
    rep.to_json(tmp_path / "r.json", header={"version": "x"})
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["header"] == {"version": "x"}
    assert data["estimate_id"] == "weight-decay"
    assert data["passed"] is True
    rep.to_csv(tmp_path / "r.csv", ["a: b"])
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[:2] == ["# a: b", "x,lhs,rhs_shape,ratio"]
    assert len(lines) == 2 + len(rep.samples)
