import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transferlaw import (
    FullLawParams,
    Observation,
    SimpleLawParams,
    ValidationError,
    full_law_eval,
    reduce_full_to_simple,
    simple_law_eval,
)

from conftest import PROPERTY_CASES

REF_FULL = FullLawParams(alpha=0.544, beta=0.322, gamma=0.478, delta=41.8, eps_irr=0.0)

rates = st.floats(0.01, 2.0)
floors = st.floats(0.0, 2.0)
coefs = st.floats(1e-3, 100.0)
sizes = st.floats(1.0, 1e9)


@st.composite
def full_params(draw):
    return FullLawParams(draw(rates), draw(rates), draw(floors), draw(coefs), draw(floors))


# --- examples ---------------------------------------------------------------

def test_simple_law_at_n_one():
    assert simple_law_eval(SimpleLawParams(0.5, 0.48, 0.1), 1) == pytest.approx(0.58, abs=1e-15)


def test_simple_law_zero_rate_is_flat():
    p = SimpleLawParams(0.0, 0.48, 0.1)
    assert np.allclose(simple_law_eval(p, np.array([1, 10, 1e6])), 0.58, rtol=0, atol=1e-15)


def test_simple_law_large_n():
    # 0.48 / 100 + 0.1
    assert simple_law_eval(SimpleLawParams(0.5, 0.48, 0.1), 10000) == pytest.approx(0.1048, rel=1e-12)


def test_full_law_reference_point():
    # 41.8 * (64000**-0.544 + 0.478) * 12800**-0.322, evaluated by hand to 4 digits
    assert full_law_eval(REF_FULL, 64000, 12800) == pytest.approx(0.9555, abs=1e-3)


def test_full_law_reciprocals():
    p = FullLawParams(1.0, 1.0, 0.0, 1.0, 0.0)
    assert full_law_eval(p, 10, 10) == pytest.approx(0.01, rel=1e-14)


def test_full_law_large_n_limit_without_floor():
    p = FullLawParams(0.7, 0.3, 0.0, 2.0, 0.05)
    assert full_law_eval(p, 1e12, 100) == pytest.approx(0.05, abs=1e-6)


def test_reduce_reference_params():
    q = reduce_full_to_simple(REF_FULL, 12800)
    assert q.alpha == 0.544
    assert q.D == pytest.approx(1.989, abs=1e-3)
    assert q.C == pytest.approx(0.951, abs=1e-3)


def test_reduce_without_fine_tuning_decay():
    p = FullLawParams(0.5, 0.0, 0.3, 2.0, 0.01)
    for s in (1, 50, 1e6):
        q = reduce_full_to_simple(p, s)
        assert q.D == 2.0
        assert q.C == pytest.approx(2.0 * 0.3 + 0.01, rel=1e-15)


def test_reduce_identity_examples():
    p = FullLawParams(0.3, 0.6, 0.2, 5.0, 0.02)
    for s in (1, 37, 12800):
        q = reduce_full_to_simple(p, s)
        for n in (1, 10, 1e6):
            assert simple_law_eval(q, n) == pytest.approx(full_law_eval(p, n, s), rel=1e-14)


@pytest.mark.parametrize("n", [0, 0.5, -3, np.nan])
def test_sizes_below_one_rejected(n):
    with pytest.raises(ValidationError):
        simple_law_eval(SimpleLawParams(0.5, 0.48, 0.1), n)
    with pytest.raises(ValidationError):
        full_law_eval(REF_FULL, n, 100)
    with pytest.raises(ValidationError):
        full_law_eval(REF_FULL, 100, n)


@pytest.mark.parametrize("kwargs", [
    dict(alpha=-0.1, D=1.0, C=0.0), dict(alpha=0.5, D=0.0, C=0.0), dict(alpha=0.5, D=1.0, C=-1e-9),
])
def test_simple_params_validated(kwargs):
    with pytest.raises(ValidationError):
        SimpleLawParams(**kwargs)


@pytest.mark.parametrize("kwargs", [
    dict(alpha=0.5, beta=0.3, gamma=-0.1, delta=1.0, eps_irr=0.0),
    dict(alpha=0.5, beta=0.3, gamma=0.1, delta=0.0, eps_irr=0.0),
    dict(alpha=0.5, beta=0.3, gamma=0.1, delta=1.0, eps_irr=-1.0),
])
def test_full_params_validated(kwargs):
    with pytest.raises(ValidationError):
        FullLawParams(**kwargs)


@pytest.mark.parametrize("kwargs", [
    dict(n=0, s=1, error=0.1), dict(n=1, s=0, error=0.1), dict(n=1, s=1, error=0.0),
    dict(n=1, s=1, error=-0.2),
])
def test_observation_validated(kwargs):
    with pytest.raises(ValidationError):
        Observation(**kwargs)


def test_reduction_identity_ten_thousand_draws():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        p = FullLawParams(rng.uniform(0.01, 2), rng.uniform(0.01, 2), rng.uniform(0, 2),
                          math.exp(rng.uniform(-5, 5)), rng.uniform(0, 1))
        s = math.exp(rng.uniform(0, 20))
        n = np.exp(rng.uniform(0, 25, 3))
        np.testing.assert_allclose(simple_law_eval(reduce_full_to_simple(p, s), n),
                                   full_law_eval(p, n, s), rtol=1e-13, atol=0)


# --- invariants ----------------------------------------------------------------

@settings(max_examples=PROPERTY_CASES)
@given(full_params(), sizes, sizes)
def test_decomposition_nonnegative(p, n, s):
    assert full_law_eval(p, n, s) - p.eps_irr >= 0


@settings(max_examples=PROPERTY_CASES)
@given(st.floats(0.7, 2.0), rates, floors, st.floats(1e-3, 10.0), floors, sizes)
def test_limit_large_fine_tuning(beta, alpha, gamma, delta, eps, n):
    # beta >= 0.7 keeps delta * (1 + gamma) * s**-beta below 1e-6 at s = 1e12 over this range
    p = FullLawParams(alpha, beta, gamma, delta, eps)
    assert abs(full_law_eval(p, n, 1e12) - eps) < 1e-6


@settings(max_examples=PROPERTY_CASES)
@given(st.floats(0.6, 2.0), rates, floors, st.floats(1e-3, 10.0), floors, sizes)
def test_limit_large_pre_training(alpha, beta, gamma, delta, eps, s):
    p = FullLawParams(alpha, beta, gamma, delta, eps)
    limit = delta * gamma * s**-beta + eps
    assert abs(full_law_eval(p, 1e12, s) - limit) < 1e-6


@settings(max_examples=PROPERTY_CASES)
@given(full_params(), sizes, sizes, st.floats(1.0, 1e3))
def test_monotone_in_both_sizes(p, n, s, factor):
    base = full_law_eval(p, n, s)
    assert full_law_eval(p, n * factor, s) <= base
    assert full_law_eval(p, n, s * factor) <= base


@settings(max_examples=PROPERTY_CASES)
@given(full_params(), st.floats(1.0, 1e6), st.floats(1.0, 1e6), st.floats(1.01, 1e3))
def test_strictly_decreasing_with_positive_rates(p, n, s, factor):
    # strict decrease needs the change to exceed rounding of the constant part
    base = full_law_eval(p, n, s)
    dn = p.delta * (n**-p.alpha - (n * factor) ** -p.alpha) * s**-p.beta
    if dn > 1e-12 * base:
        assert full_law_eval(p, n * factor, s) < base
    ds = p.delta * (n**-p.alpha + p.gamma) * (s**-p.beta - (s * factor) ** -p.beta)
    if ds > 1e-12 * base:
        assert full_law_eval(p, n, s * factor) < base


@settings(max_examples=PROPERTY_CASES)
@given(st.floats(0.01, 2.0), coefs, floors, sizes, st.floats(1.01, 1e3))
def test_simple_law_strictly_decreasing(alpha, D, C, n, factor):
    p = SimpleLawParams(alpha, D, C)
    drop = D * (n**-alpha - (n * factor) ** -alpha)
    if drop > 1e-12 * simple_law_eval(p, n):
        assert simple_law_eval(p, n * factor) < simple_law_eval(p, n)


@settings(max_examples=PROPERTY_CASES)
@given(full_params(), sizes, st.lists(sizes, min_size=1, max_size=5))
def test_reduction_identity(p, s, ns):
    n = np.array(ns)
    np.testing.assert_allclose(simple_law_eval(reduce_full_to_simple(p, s), n),
                               full_law_eval(p, n, s), rtol=1e-13, atol=0)
