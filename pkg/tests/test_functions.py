import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from transferlaw import ValidationError
from transferlaw.theory import _circle
from transferlaw.theory.functions import (
    FourierFunction,
    KernelExpansion,
    l2_error,
    make_target,
    mode_eigenvalues,
    reference_asgd,
    regularized_target,
)
from transferlaw.theory.kernels import KernelSpec, designed_kernel_eval, spectrum
from transferlaw.theory.network import init_network

DESIGNED = KernelSpec.designed(2.0, 32)
GAMMA = np.arange(1, 33) ** -2.0 / 2

coef_vectors = hnp.arrays(np.float64, 32, elements=st.floats(-1.0, 1.0))


def grid_values(f, Q=256):
    return f(_circle.grid(Q))


# --- Fourier functions ------------------------------------------------------

def test_fourier_basis_orthonormal():
    f = FourierFunction(np.array([0.3, 0.0, -1.2]), np.array([0.0, 0.7, 0.1]))
    assert np.mean(grid_values(f) ** 2) == pytest.approx(f.l2_norm_sq(), rel=1e-14)


def test_fourier_arithmetic_pads():
    f = FourierFunction(np.array([1.0]), np.array([0.0]))
    g = FourierFunction(np.array([0.0, 2.0]), np.array([1.0, 0.0]))
    h = f + 2 * g - f
    assert h.L == 2
    assert np.allclose(grid_values(h), 2 * grid_values(g), atol=1e-14)


def test_fourier_sup_bound_holds():
    rng = np.random.default_rng(0)
    f = FourierFunction(rng.standard_normal(8), rng.standard_normal(8))
    assert np.max(np.abs(f(np.linspace(0, 2 * np.pi, 4001)))) <= f.sup_bound() + 1e-12


def test_fourier_rejects_mismatched_coefficients():
    with pytest.raises(ValidationError):
        FourierFunction(np.zeros(3), np.zeros(2))


def test_kernel_expansion_weights_aligned():
    with pytest.raises(ValidationError, match="weights"):
        KernelExpansion(DESIGNED, np.array([[1.0, 0.0]]), np.zeros(2))


# --- targets ----------------------------------------------------------------

def test_single_mode_target():
    f = make_target(DESIGNED, 0.5, "first")
    amp = np.sqrt(GAMMA[0])
    scale = min(1.0, 1.0 / (np.sqrt(2) * amp))
    assert f.cos[0] == pytest.approx(scale * amp, rel=1e-15)
    assert np.all(f.cos[1:] == 0) and np.all(f.sin == 0)
    assert f.source_norm == pytest.approx(scale, rel=1e-15)


@given(st.floats(0.5, 1.0), st.integers(0, 2**16))
def test_stored_norm_matches_coefficients(r, seed):
    f = make_target(DESIGNED, r, "power:0.5", seed=seed)
    brute = np.sqrt(np.sum((f.cos / GAMMA**r) ** 2 + (f.sin / GAMMA**r) ** 2))
    assert f.source_norm == pytest.approx(brute, rel=1e-10)


def test_target_range_bounded():
    f = make_target(KernelSpec.designed(1.2, 64), 0.5, "power:0.1", seed=3)
    assert f.sup_bound() <= 1.0 + 1e-12


def test_smoother_target_is_smaller():
    c = np.linspace(0.2, 0.02, 32)
    rough = make_target(DESIGNED, 0.5, c)
    smooth = make_target(DESIGNED, 1.0, c)
    assert rough.source_norm == pytest.approx(smooth.source_norm)  # neither was rescaled
    assert smooth.l2_norm_sq() < rough.l2_norm_sq()


@pytest.mark.parametrize("r", [0.49, 1.01])
def test_target_rejects_smoothness_out_of_range(r):
    with pytest.raises(ValidationError):
        make_target(DESIGNED, r)


def test_target_from_spectrum_report():
    rep = spectrum(DESIGNED, 256)
    a = make_target(rep, 0.75, "power:1", seed=2, L=32)
    b = make_target(DESIGNED, 0.75, "power:1", seed=2)
    assert np.allclose(a.cos[:32], b.cos, rtol=1e-8, atol=1e-14)


def test_mode_eigenvalues_need_fourier_structure():
    with pytest.raises(ValidationError):
        mode_eigenvalues(KernelSpec.random_feature(init_network(8, 2, 0)))


# --- regularised targets ----------------------------------------------------

def test_regularized_small_lambda_is_identity():
    f = make_target(DESIGNED, 0.5, "power:1", seed=1)
    g = regularized_target(DESIGNED, f, 1e-14)
    assert np.allclose(g.cos, f.cos, rtol=1e-10) and np.allclose(g.sin, f.sin, rtol=1e-10)


def test_regularized_at_first_eigenvalue_halves_first_mode():
    f = make_target(DESIGNED, 0.5, "power:1", seed=1)
    g = regularized_target(DESIGNED, f, GAMMA[0])
    assert g.cos[0] == pytest.approx(f.cos[0] / 2, rel=1e-15)
    assert g.sin[0] == pytest.approx(f.sin[0] / 2, rel=1e-15)


def test_regularized_rejects_nonpositive_lambda():
    with pytest.raises(ValidationError):
        regularized_target(DESIGNED, FourierFunction.zeros(4), 0.0)


@given(coef_vectors, coef_vectors, st.floats(1e-8, 10.0))
def test_regularized_contracts(c, s, lam):
    f = FourierFunction(c, s)
    g = regularized_target(DESIGNED, f, lam)
    assert np.all(np.abs(g.cos) <= np.abs(f.cos)) and np.all(np.abs(g.sin) <= np.abs(f.sin))


@given(st.floats(0.5, 1.0), st.floats(1e-6, 1.0), st.integers(0, 2**16))
def test_regularization_bias_bound(r, lam, seed):
    f = make_target(DESIGNED, r, "power:0.5", seed=seed)
    gap = (regularized_target(DESIGNED, f, lam) - f).l2_norm_sq()
    assert gap <= lam ** (2 * r) * f.source_norm**2 * (1 + 1e-12)


# --- reference ASGD ---------------------------------------------------------

def test_reference_zero_rate_returns_init():
    init = make_target(DESIGNED, 0.5, "power:1", seed=4)
    target = make_target(DESIGNED, 1.0, "first")
    out = reference_asgd(DESIGNED, target, 50, 0.0, 0.1, init=init, seed=0)
    assert np.array_equal(out.cos, init.cos) and np.array_equal(out.sin, init.sin)


def test_reference_zero_everything_is_zero():
    out = reference_asgd(DESIGNED, FourierFunction.zeros(32), 40, 0.3, 0.1, seed=1)
    assert out.l2_norm_sq() == 0.0


def test_reference_rf_zero_everything_is_zero():
    spec = KernelSpec.random_feature(init_network(16, 2, 0))
    out = reference_asgd(spec, FourierFunction.zeros(8), 20, 0.3, 0.1, seed=1)
    assert np.all(out(_circle.to_points(_circle.grid(64))) == 0.0)


def _naive_expansion(xi, L, target, T, eta, lam, init, theta):
    """Average of g^0..g^T tracked as explicit kernel weights on visited angles."""
    y = target(theta)
    w = np.zeros(T)
    base = 1.0
    avg_w = np.zeros(T)
    avg_base = base
    for t in range(T):
        g_t = base * init(theta[t]) + sum(w[j] * designed_kernel_eval(xi, L, theta[t], theta[j])
                                          for j in range(t))
        w *= 1 - eta * lam
        base *= 1 - eta * lam
        w[t] = -eta * (g_t - y[t])
        avg_w += w
        avg_base += base

    def evaluate(phi):
        return (avg_base * init(phi)
                + designed_kernel_eval(xi, L, phi[:, None], theta[None, :]) @ avg_w) / (T + 1)
    return evaluate


def test_reference_matches_naive_expansion():
    T, eta, lam = 100, 0.3, 0.05
    theta = np.random.default_rng(5).uniform(0, 2 * np.pi, T)
    target = make_target(DESIGNED, 0.75, "power:1", seed=5)
    init = make_target(DESIGNED, 0.5, "first") * 0.5
    fast = reference_asgd(DESIGNED, target, T, eta, lam, init=init, seed=theta)
    slow = _naive_expansion(2.0, 32, target, T, eta, lam, init, theta)
    phi = _circle.grid(128)
    assert np.max(np.abs(fast(phi) - slow(phi))) <= 1e-10


def test_reference_rf_matches_designed_form_in_feature_space():
    # the RF path must agree with a naive Gram-matrix recursion too
    state = init_network(32, 2, 3)
    spec = KernelSpec.random_feature(state)
    T, eta, lam = 60, 0.2, 0.1
    theta = np.random.default_rng(6).uniform(0, 2 * np.pi, T)
    target = make_target(DESIGNED, 1.0, "first")
    X = _circle.to_points(theta)
    K = spec.gram(X, X)
    y = target(theta)
    w = np.zeros(T)
    avg = np.zeros(T)
    for t in range(T):
        resid = K[t, :t] @ w[:t] - y[t]
        w *= 1 - eta * lam
        w[t] = -eta * resid
        avg += w
    G = _circle.to_points(_circle.grid(64))
    want = spec.gram(G, X) @ avg / (T + 1)
    got = reference_asgd(spec, target, T, eta, lam, seed=theta)(G)
    assert np.max(np.abs(got - want)) <= 1e-10


def test_reference_rejects_mismatched_representation():
    with pytest.raises(ValidationError):
        reference_asgd(DESIGNED, FourierFunction.zeros(4), 5, 0.1, 0.1,
                       init=init_network(4, 2, 0))
    with pytest.raises(ValidationError, match="not available"):
        reference_asgd(KernelSpec.ntk(16), FourierFunction.zeros(4), 5, 0.1, 0.1)


def test_reference_deterministic_per_seed():
    target = make_target(DESIGNED, 1.0, "power:1", seed=0)
    a = reference_asgd(DESIGNED, target, 64, 0.2, 0.01, seed=9)
    b = reference_asgd(DESIGNED, target, 64, 0.2, 0.01, seed=9)
    assert np.array_equal(a.cos, b.cos)


# --- L2 error ---------------------------------------------------------------

def test_l2_error_identical_is_zero():
    f = make_target(DESIGNED, 0.5, "power:1", seed=0)
    assert l2_error(f, f) == 0.0


def test_l2_error_of_cosine():
    assert l2_error(lambda X: X[:, 0], lambda X: np.zeros(len(X))) == pytest.approx(0.5, abs=1e-15)


@given(coef_vectors, coef_vectors, coef_vectors, coef_vectors)
def test_l2_error_parseval(c1, s1, c2, s2):
    f, g = FourierFunction(c1, s1), FourierFunction(c2, s2)
    want = np.sum((c1 - c2) ** 2 + (s1 - s2) ** 2)
    assert l2_error(f, g, Q=128) == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_l2_error_accepts_network():
    state = init_network(16, 2, 0)
    f = FourierFunction(np.array([0.4]), np.array([0.0]))
    assert l2_error(f, state) == pytest.approx(0.16, rel=1e-12)


def test_l2_error_rejects_coarse_grid():
    with pytest.raises(ValidationError):
        l2_error(FourierFunction.zeros(2), FourierFunction.zeros(2), Q=32)
