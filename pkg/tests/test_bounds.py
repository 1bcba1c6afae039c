import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cosparse.bounds import (BoundQuery, e_m, error_bounds, m_nonuniform, m_nonuniform_noisy,
                             m_uniform, m_uniform_robust, min_measurements,
                             rhs_nonuniform, rhs_nonuniform_noisy, rhs_uniform,
                             rhs_uniform_robust, satisfies)

import oracles


def q(**kw):
    base = dict(A=1.0, B=1.0, s=10, p=200, eps=0.01)
    base.update(kw)
    return BoundQuery(**base)


def test_nonuniform_example():
    assert rhs_nonuniform(q()) == pytest.approx(143.385, abs=1e-3)
    assert m_nonuniform(q()) == 145


def test_nonuniform_matches_independent_formula():
    for A, B, s, p, eps in itertools.product([0.5, 1], [1, 3], [1, 7, 40], [50, 300], [0.01, 0.3]):
        if A > B or s > p:
            continue
        rhs = oracles.rhs_nonuniform(A, B, s, p, eps)
        assert rhs_nonuniform(BoundQuery(A, B, s, p, eps)) == pytest.approx(rhs, rel=1e-13)
        assert m_nonuniform(BoundQuery(A, B, s, p, eps)) == oracles.min_m_scan(rhs)


def test_noisy_example():
    res = m_nonuniform_noisy(q(tau=1.0, eta=0.1))
    assert rhs_nonuniform_noisy(q(tau=1.0)) == pytest.approx(168.3, abs=0.05)
    assert res.m == 170
    assert res.error_radius == pytest.approx(0.2)


def test_noisy_small_tau_limit():
    assert m_nonuniform_noisy(q(tau=1e-12)).m == m_nonuniform(q())


def test_uniform_example():
    qq = q(s=5, p=50, rho=0.9)
    assert rhs_uniform(qq) == pytest.approx(470.14, abs=0.05)
    assert m_uniform(qq) == 472
    rhs = oracles.rhs_uniform(1, 1, 5, 50, 0.01, 0.9)
    assert m_uniform(qq) == oracles.min_m_scan(rhs)


def test_robust_example():
    qq = q(s=5, p=50, rho=0.9, tau=2.0)
    assert rhs_uniform_robust(qq) == pytest.approx(4 * rhs_uniform(qq), rel=1e-14)
    res = m_uniform_robust(qq)
    assert res.m == 1882
    assert res.sigma_coef == pytest.approx(2 * 1.9 ** 2 / (0.1 * math.sqrt(5)))
    assert res.noise_coef == pytest.approx(2 * 2 * math.sqrt(2) * 3.9 / (math.sqrt(1882) * 0.1))


def test_robust_large_tau_limit():
    qq = q(s=5, p=50, rho=0.9, tau=1e9)
    assert rhs_uniform_robust(qq) == pytest.approx(rhs_uniform(qq), rel=1e-8)


def test_robust_needs_tau_above_one():
    with pytest.raises(ValueError):
        m_uniform_robust(q(rho=0.5, tau=1.0))


@pytest.mark.parametrize("m, expected", [(1, math.sqrt(2 / math.pi)), (2, math.sqrt(math.pi / 2))])
def test_e_m_closed_forms(m, expected):
    assert e_m(m) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("m", [1, 2, 3, 10, 57, 300])
def test_e_m_matches_chi_mean(m):
    assert e_m(m) == pytest.approx(oracles.chi_mean(m), rel=1e-12)
    assert e_m(m) == pytest.approx(oracles.e_m_gamma(m), rel=1e-12)


def test_e_m_large_is_finite():
    assert math.isfinite(e_m(10 ** 7))


@pytest.mark.parametrize("bad", [dict(A=0), dict(A=2, B=1), dict(s=0), dict(s=201),
                                 dict(eps=1.0), dict(eps=0), dict(rho=1.0), dict(tau=0.0),
                                 dict(eta=-1.0)])
def test_query_validation(bad):
    with pytest.raises(ValueError):
        q(**bad)


def test_missing_parameters():
    with pytest.raises(ValueError):
        m_uniform(q())
    with pytest.raises(ValueError):
        m_nonuniform_noisy(q())


@settings(max_examples=300)
@given(st.floats(1e-3, 1e6))
def test_min_measurements_is_minimal(rhs):
    m = min_measurements(rhs)
    assert m * m / (m + 1) >= rhs * (1 - 1e-15)
    assert m == 1 or (m - 1) ** 2 / m < rhs * (1 + 1e-15)
    assert satisfies(m, rhs) and (m == 1 or not satisfies(m - 1, rhs))


GRID_S = [1, 3, 10, 30, 100]
GRID_R = [1.0, 2.0, 5.0, 13.1254, 45.7716]
GRID_E = [0.3, 0.1, 0.02, 0.01, 0.001]


def _all_m(s, r, eps):
    qq = BoundQuery(1.0, r, s, 200, eps, rho=0.7, tau=2.0)
    return {
        "nonuniform": (m_nonuniform(qq), rhs_nonuniform(qq)),
        "noisy": (m_nonuniform_noisy(qq).m, rhs_nonuniform_noisy(qq)),
        "uniform": (m_uniform(qq), rhs_uniform(qq)),
        "robust": (m_uniform_robust(qq).m, rhs_uniform_robust(qq)),
    }


def test_monotone_in_s_ratio_and_eps():
    table = {(s, r, e): _all_m(s, r, e) for s in GRID_S for r in GRID_R for e in GRID_E}
    for key in table[(1, 1.0, 0.3)]:
        arr = np.array([[[table[(s, r, e)][key][0] for e in GRID_E] for r in GRID_R]
                        for s in GRID_S])
        assert np.all(np.diff(arr, axis=0) >= 0)
        assert np.all(np.diff(arr, axis=1) >= 0)
        assert np.all(np.diff(arr, axis=2) >= 0)


def test_doubling_ratio_increases_m():
    for s in GRID_S:
        a = m_nonuniform(BoundQuery(1.0, 2.0, s, 200, 0.02))
        b = m_nonuniform(BoundQuery(1.0, 4.0, s, 200, 0.02))
        assert b > a


def test_uniform_dominates_nonuniform():
    for s, r, e, rho in itertools.product(GRID_S, GRID_R, GRID_E, [0.1, 0.5, 0.99]):
        qq = BoundQuery(1.0, r, s, 200, e, rho=rho)
        assert rhs_uniform(qq) >= rhs_nonuniform(qq)
        assert m_uniform(qq) >= m_nonuniform(qq)


def test_uniform_decreasing_in_rho():
    ms = [m_uniform(q(rho=r)) for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(a >= b for a, b in zip(ms, ms[1:]))


def test_error_bound_examples():
    out = error_bounds(q(s=4, rho=0.5), 1.0)
    assert out["l2"] == pytest.approx(4.5)
    assert out["l1"] == pytest.approx(6.0)
    assert error_bounds(q(rho=0.5), 0.0) == {"l1": 0.0, "l2": 0.0, "l2_robust": 0.0, "cone": 0.0}


def test_error_bounds_noise_terms():
    qq = q(s=4, rho=0.5, tau=2.0, eta=0.1, B=2.0)
    out = error_bounds(qq, 1.0)
    assert out["cone"] == pytest.approx(0.1)
    assert out["l2_robust"] - out["l2"] == pytest.approx(2 * 2 * 3.5 / 0.5 * 0.1)
    g = error_bounds(qq, 1.0, m=16, gaussian_tau=True)
    assert g["l2_robust"] - g["l2"] == pytest.approx(2 * 2 * math.sqrt(4) / 4 * 3.5 / 0.5 * 0.1)
    with pytest.raises(ValueError):
        error_bounds(qq, 1.0, gaussian_tau=True)


@settings(max_examples=100)
@given(st.floats(0, 10), st.floats(0, 5), st.floats(0.1, 10))
def test_error_bounds_homogeneous(sigma, eta, c):
    a = error_bounds(q(rho=0.5, tau=2.0, eta=eta), sigma)
    b = error_bounds(q(rho=0.5, tau=2.0, eta=c * eta), c * sigma)
    for key in a:
        assert a[key] >= 0
        assert b[key] == pytest.approx(c * a[key], rel=1e-12, abs=1e-300)
