import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cosparse.frames import make_frame, tight_frame
from cosparse.model import null_space
from cosparse.nsp import (Variant, Verdict, implied_errors, nsp_check, nsp_margin,
                          worst_cosupport)

import oracles


@pytest.mark.parametrize("w, s, expected", [
    ((3, 1, 2), 1, [1, 2]),
    ((1, 1), 1, [1]),
    ((0, 0), 1, [1]),
    ((-5, 4, 4, 1), 2, [2, 3]),
])
def test_worst_cosupport_examples(w, s, expected):
    assert list(worst_cosupport(w, s)) == expected


def test_worst_cosupport_zero_margins():
    lam = worst_cosupport([0.0, 0.0], 1)
    for variant in Variant:
        assert nsp_margin([0.0, 0.0], lam, 1, 0.5, variant) == 0.0


def test_analytic_falsification():
    rng = np.random.default_rng(0)
    for rho in (0.1, 0.5, 0.99):
        rep = nsp_check(np.array([[1.0, -1.0]]), make_frame(np.eye(2)), 1, rho, "plain", 5, rng)
        assert rep.status is Verdict.FALSIFIED and rep.falsified
        assert np.allclose(np.abs(rep.witness_v), 1 / math.sqrt(2))
        # LHS = |v_1| and RHS = rho |v_2| with |v_1| = |v_2|
        assert rep.worst_margin == pytest.approx((1 - rho) / math.sqrt(2))


def test_square_matrix_is_vacuous(rng):
    f = tight_frame(6, 4, rng)
    rep = nsp_check(rng.standard_normal((4, 4)), f, 2, 0.5, "l2_stable", 50, rng)
    assert rep.status is Verdict.NOT_FALSIFIED and rep.n_tested == 0
    assert rep.as_dict()["worst_margin"] is None


def test_verdict_matches_margin_sign(rng):
    f = tight_frame(8, 6, rng)
    for m in range(1, 6):
        rep = nsp_check(rng.standard_normal((m, 6)), f, 2, 0.5, "plain", 100, rng)
        assert rep.falsified == (rep.worst_margin > 0)
        assert rep.n_tested == 100


def test_robust_needs_tau(rng):
    f = tight_frame(8, 6, rng)
    with pytest.raises(ValueError):
        nsp_check(rng.standard_normal((3, 6)), f, 2, 0.5, "robust", 10, rng)
    with pytest.raises(ValueError):
        nsp_check(rng.standard_normal((3, 6)), f, 2, 1.0, "plain", 10, rng)


def test_robust_large_tau_not_falsified(rng):
    f = tight_frame(8, 6, rng)
    M = rng.standard_normal((6, 6))
    rep = nsp_check(M, f, 2, 0.5, "robust", 200, rng, tau=1e6)
    assert rep.status is Verdict.NOT_FALSIFIED and rep.n_tested == 200


@pytest.mark.parametrize("variant", ["plain", "l2_stable", "robust"])
def test_worst_cosupport_agrees_with_enumeration(variant):
    rng = np.random.default_rng(5)
    for _ in range(1000):
        p = int(rng.integers(2, 9))
        s = int(rng.integers(1, p + 1))
        w = rng.standard_normal(p) * rng.choice([0.0, 1.0], p, p=[0.2, 0.8])
        rho, mv, tau = rng.uniform(0.05, 0.95), abs(rng.standard_normal()), 0.3
        lam = worst_cosupport(w, s)
        fast = nsp_margin(w, lam, s, rho, variant, mv, tau) > 0
        assert fast == oracles.nsp_violated_exhaustive(w, s, rho, variant, mv, tau)


def test_l2_stable_implies_plain(rng):
    f = tight_frame(12, 9, rng)
    for m in (3, 5, 7):
        M = rng.standard_normal((m, 9))
        V = rng.standard_normal((300, 9 - m)) @ null_space(M).T
        for v in V:
            w = f.omega @ v
            for s in (1, 3, 5):
                lam = worst_cosupport(w, s)
                for rho in (0.2, 0.7):
                    if nsp_margin(w, lam, s, rho, "l2_stable") <= 0:
                        assert nsp_margin(w, lam, s, rho, "plain") <= 1e-12


def _in_w_set(omega, v, s, rho):
    """Direct membership test of the set of vectors violating the l2 property."""
    import itertools
    w = omega @ v
    p = w.size
    for comp in itertools.combinations(range(p), s):
        on = np.zeros(p, bool)
        on[list(comp)] = True
        if np.linalg.norm(w[on]) > rho / math.sqrt(s) * np.abs(w[~on]).sum():
            return True
    return False


def test_falsifying_vectors_are_exactly_w_set(rng):
    f = tight_frame(7, 5, rng)
    M = rng.standard_normal((2, 5))
    V = rng.standard_normal((300, 3)) @ null_space(M).T
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    for v in V:
        w = f.omega @ v
        violated = nsp_margin(w, worst_cosupport(w, 2), 2, 0.6, "l2_stable") > 0
        assert violated == _in_w_set(f.omega, v, 2, 0.6)


def test_report_json_shape(rng):
    rep = nsp_check(np.array([[1.0, -1.0]]), make_frame(np.eye(2)), 1, 0.5, "plain", 3, rng)
    d = rep.as_dict()
    assert d["variant"] == "plain" and d["status"] == "Falsified"
    assert set(d["witness"]) == {"v", "cosupport"} and d["n_tested"] == 3


def test_deterministic():
    f = tight_frame(10, 8, np.random.default_rng(0))
    M = np.random.default_rng(1).standard_normal((4, 8))
    a = nsp_check(M, f, 2, 0.5, "plain", 100, np.random.default_rng(2))
    b = nsp_check(M, f, 2, 0.5, "plain", 100, np.random.default_rng(2))
    assert a.worst_margin == b.worst_margin


def test_implied_errors():
    assert implied_errors(0.5, 1.0, 4, 1.0)["l2"] == pytest.approx(4.5)
    assert implied_errors(0.5, 1.0, 4, 0.0) == {"l1": 0.0, "l2": 0.0, "l2_robust": 0.0,
                                                "cone": 0.0}
    out = implied_errors(0.5, 1.0, 4, 1.0, tau=2.0, eta=0.1)
    assert out["l2_robust"] > out["l2"] and out["cone"] == pytest.approx(0.1)


@settings(max_examples=200)
@given(arrays(float, st.integers(1, 10), elements=st.floats(-10, 10)), st.data())
def test_worst_cosupport_size_and_order(w, data):
    s = data.draw(st.integers(1, w.size))
    lam = worst_cosupport(w, s)
    assert lam.size == w.size - s
    assert np.all(np.diff(lam) > 0)
    comp = np.setdiff1d(np.arange(w.size), lam)
    if lam.size:
        assert np.abs(w[comp]).min() >= np.abs(w[lam]).max()
