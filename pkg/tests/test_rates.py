from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from transferlaw import ValidationError
from transferlaw.theory.rates import (
    TERM_LABELS,
    admissible_eta1,
    bound_terms,
    boundary_report,
    optimal_lambda0,
    pretrain_rate,
    rate_predict,
)

smooth = st.floats(0.5, 1.0)
decay = st.floats(1.01, 10.0)

# (r0, r1, xi, zeta) -> case, T1 exponent, R0 exponent; worked out by hand from the
# regime formulas with exact fractions.
TABLE = [
    ((F(1, 2), F(1, 2), 2, F(1, 3)), "I-A", F(4, 9), F(1, 3)),
    ((1, F(1, 2), 2, F(1, 2)), "I-A", F(1, 3), F(1, 3)),
    ((1, 1, 2, F(1, 2)), "I-A", F(1, 2), F(1, 2)),
    ((F(1, 2), F(1, 2), 2, F(1, 5)), "II-A", F(1, 2), F(1, 2)),
    ((1, F(1, 2), 2, 0), "II-A", F(1, 2), F(1, 2)),
    ((1, 1, 2, F(1, 4)), "II-A", F(2, 3), F(2, 3)),
    ((F(1, 2), 1, 2, F(1, 2)), "I-B", F(1, 3), F(1, 3)),
    ((F(1, 2), F(3, 4), 2, F(3, 10)), "I-B", F(7, 15), F(1, 3)),
    ((F(3, 5), F(4, 5), 3, F(1, 2)), "I-B", F(3, 8), F(3, 8)),
    ((F(1, 2), F(3, 4), 2, F(1, 5)), "II-B", F(1, 2), F(1, 2)),
    ((F(3, 5), F(4, 5), 3, F(1, 10)), "II-B", F(6, 11), F(6, 11)),
    ((F(1, 2), F(3, 5), F(3, 2), 0), "II-B", F(1, 2), F(1, 2)),
]


# --- pre-training -----------------------------------------------------------

def test_pretrain_rate_value():
    assert pretrain_rate(0.5, 2.0) == pytest.approx(2 / 3, rel=1e-15)


def test_pretrain_rate_limit():
    assert pretrain_rate(1.0, 1e9) == pytest.approx(1.0, abs=1e-9)


@given(smooth, decay, st.floats(0.0, 0.5), st.floats(0.0, 5.0))
def test_pretrain_rate_increasing(r0, xi, dr, dxi):
    base = pretrain_rate(r0, xi)
    assert pretrain_rate(min(r0 + dr, 1.0), xi) >= base
    assert pretrain_rate(r0, xi + dxi) >= base


def test_pretrain_rate_domain():
    with pytest.raises(ValidationError):
        pretrain_rate(0.4, 2.0)
    with pytest.raises(ValidationError):
        pretrain_rate(0.5, 1.0)


def test_optimal_lambda0_values():
    assert optimal_lambda0(1, 0.5, 2.0) == 1.0
    assert optimal_lambda0(1000, 0.5, 2.0) == pytest.approx(1e-2, rel=1e-12)


@given(smooth, decay, st.floats(1.0, 1e6), st.floats(1.0, 100.0))
def test_optimal_lambda0_decreasing(r0, xi, T0, factor):
    assert optimal_lambda0(T0 * factor, r0, xi) <= optimal_lambda0(T0, r0, xi)


# --- bound terms ------------------------------------------------------------

def test_bound_terms_hand_values():
    t = bound_terms(1e4, 1e-2, 0.1, 2.0, 0.5, 0.5, 1.0)
    want = dict(a0=1e-2, a1=1e-2, b=1e-2, c=1e-4, d=1e-4, e=1e-2, f=1e-4, g=1e-4, h=1e-3)
    for label in TERM_LABELS:
        assert t[label] == pytest.approx(want[label], rel=1e-12), label
    assert t.dominant in ("a0", "a1", "b", "e")


@given(smooth, st.floats(1e-6, 0.999), st.floats(1.0, 1e6), st.floats(1e-3, 1.0), decay)
def test_symmetric_smoothness_equal_bias_terms(r, lam, T1, eta, xi):
    t = bound_terms(T1, lam, eta, xi, r, r, 1.0)
    assert t["a0"] == t["a1"]


@given(smooth, smooth, st.floats(1e-6, 0.999), st.floats(1.0, 1e6), st.floats(1e-3, 1.0), decay)
def test_variance_term_orderings(r0, r1, lam, T1, eta, xi):
    t = bound_terms(T1, lam, eta, xi, r0, r1, 1.0)
    assert t["c"] <= t["b"] * (1 + 1e-12)
    assert t["d"] <= t["b"] * (1 + 1e-12)
    assert t["f"] <= t["e"] * (1 + 1e-12)


def test_dominant_is_largest():
    t = bound_terms(100.0, 0.5, 0.01, 2.0, 1.0, 0.5, 0.3)
    assert t[t.dominant] == max(t.values.values())


def test_bound_terms_domain():
    with pytest.raises(ValidationError):
        bound_terms(0.0, 0.1, 0.1, 2.0, 0.5, 0.5, 1.0)
    with pytest.raises(ValidationError):
        bound_terms(10.0, 0.1, 0.1, 2.0, 0.5, 1.5, 1.0)


def test_admissible_eta1():
    assert admissible_eta1(1 / 24, 0.0)
    assert not admissible_eta1(0.05, 0.0)


# --- regimes ----------------------------------------------------------------

@pytest.mark.parametrize("args, case, t1, r0e", TABLE)
def test_rate_table(args, case, t1, r0e):
    pred = rate_predict(*(float(a) for a in args))
    assert pred.case == case
    assert pred.condition_ok
    assert pred.T1_exponent == pytest.approx(float(t1), abs=1e-12)
    assert pred.R0_exponent == pytest.approx(float(r0e), abs=1e-12)


def test_case_I_lambda_rule():
    pred = rate_predict(0.5, 0.5, 2.0, 1 / 3)
    assert pred.lambda1_T1_exponent == pytest.approx((1 - 1 / 3) / 1.5, rel=1e-14)
    assert pred.lambda1_R0_exponent == pytest.approx(1 / 3, rel=1e-14)
    assert pred.lambda1(1e4, 0.01) == pytest.approx(1e4 ** -(4 / 9) * 0.01 ** (1 / 3), rel=1e-12)


def test_zeta_too_small_for_I_B_flagged():
    pred = rate_predict(0.5, 1.0, 2.0, 0.3)
    assert pred.case == "I-B" and not pred.condition_ok
    assert pred.violated and "zeta" in pred.violated[0]


def test_r1_too_large_for_II_B_flagged():
    pred = rate_predict(0.5, 1.0, 2.0, 0.2)
    assert pred.case == "II-B" and not pred.condition_ok
    assert "r1" in pred.violated[0]


@pytest.mark.parametrize("r1", np.linspace(0.5, 1.0, 11))
def test_T0_exponent_limit(r1):
    pred = rate_predict(1.0, r1, 1e9, 0.99)
    lim = pred.T0_exponent(1.0, 1e9)
    assert lim == pytest.approx(r1 / (r1 + 1), abs=1e-6)
    # the exponent approaches its limit from below; the limit itself is R0_exponent
    assert lim < pred.R0_exponent
    assert 1 / 3 - 1e-12 <= pred.R0_exponent <= 1 / 2 + 1e-12


@given(smooth, smooth, decay, st.floats(0.0, 0.999))
def test_exponents_positive_and_bounded(r0, r1, xi, zeta):
    pred = rate_predict(r0, r1, xi, zeta)
    assert 0 < pred.R0_exponent <= 1
    assert 0 <= pred.T1_exponent <= 1


@given(smooth, smooth, decay)
def test_boundary_T1_exponents_agree(r0, r1, xi):
    rep = boundary_report(r0, r1, xi)
    assert rep["T1_match"]
    up, down = rep["T1_exponent"]
    assert up == pytest.approx(down, abs=1e-12)


def test_boundary_R0_mismatch_reported():
    rep = boundary_report(0.5, 0.5, 2.0)
    assert rep["zeta"] == pytest.approx(0.25)
    assert rep["R0_exponent"] == pytest.approx((1 / 3, 1 / 2))
    assert not rep["R0_match"]


def test_rate_predict_domain():
    with pytest.raises(ValidationError):
        rate_predict(0.5, 0.5, 2.0, 1.0)
    with pytest.raises(ValidationError):
        rate_predict(0.5, 0.5, 0.9, 0.3)
