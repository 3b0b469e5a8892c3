"""Two-layer scalar network ``g(x) = M**-0.5 * sum_r a_r * sigma(b_r . x)`` trained by ASGD."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .._validation import check_scalar, check_unit_rows
from ..exceptions import ValidationError

__all__ = [
    "ACTIVATIONS",
    "NetworkState",
    "init_network",
    "network_eval",
    "asgd_step",
    "run_asgd",
    "regularized_risk",
]


def _tanh(u):
    return np.tanh(u)


def _tanh_prime(u):
    t = np.tanh(u)
    return 1.0 - t * t


def _tanh_both(u):
    t = np.tanh(u)
    dt = np.multiply(t, t)
    np.subtract(1.0, dt, out=dt)
    return t, dt


class Activation(NamedTuple):
    f: Callable
    df: Callable
    both: Callable  # u -> (f(u), df(u)) sharing work


ACTIVATIONS = {"tanh": Activation(_tanh, _tanh_prime, _tanh_both)}


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class NetworkState:
    """Parameters ``(a, b)`` and the snapshot ``(a0, b0)`` they are regularised toward.

    ``a0`` and ``b0`` are read-only arrays.  Neurons are stored in sign pairs
    (rows ``2k`` and ``2k+1``) so that a fresh network is exactly zero.
    """

    a: np.ndarray
    b: np.ndarray
    a0: np.ndarray
    b0: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.a.ndim != 1 or self.b.ndim != 2 or self.b.shape[0] != self.a.shape[0]:
            raise ValidationError("a must have shape (M,) and b shape (M, d)")
        if self.a0.shape != self.a.shape or self.b0.shape != self.b.shape:
            raise ValidationError("snapshot shapes must match the parameters")
        if not np.allclose(np.linalg.norm(self.b0, axis=1), 1.0, rtol=0, atol=1e-8):
            raise ValidationError("rows of the initial input weights b0 must be unit vectors")
        object.__setattr__(self, "a0", _frozen(self.a0))
        object.__setattr__(self, "b0", _frozen(self.b0))

    @property
    def width(self):
        return self.a.shape[0]

    @property
    def dim(self):
        return self.b.shape[1]

    def with_params(self, a, b):
        """Same snapshot, new parameters."""
        return NetworkState(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64),
                            self.a0, self.b0, self.activation)


def init_network(M, d, seed, activation="tanh") -> NetworkState:
    """Paired-sign initialisation: unit-sphere rows, ``a = +1, -1`` per pair, ``g == 0``."""
    M = check_scalar(M, "M", min_val=2, integer=True)
    d = check_scalar(d, "d", min_val=1, integer=True)
    if M % 2:
        raise ValidationError(f"M must be even so signs cancel, got {M}")
    rng = np.random.default_rng(seed)
    half = rng.standard_normal((M // 2, d))
    half /= np.linalg.norm(half, axis=1, keepdims=True)
    b = np.repeat(half, 2, axis=0)
    a = np.tile([1.0, -1.0], M // 2)
    return NetworkState(a, b, a.copy(), b.copy(), activation)


def _forward(state, X):
    """Network output for rows of X, summing sign pairs first."""
    contrib = ACTIVATIONS[state.activation].f(X @ state.b.T) * state.a
    M = state.width
    if M % 2 == 0:
        # pairwise sums are exact zeros at initialisation
        contrib = contrib.reshape(contrib.shape[:-1] + (M // 2, 2)).sum(axis=-1)
    return contrib.sum(axis=-1) / np.sqrt(M)


def network_eval(state: NetworkState, x):
    """Evaluate the network at one unit vector ``(d,)`` or many ``(N, d)``."""
    x = check_unit_rows(x)
    if x.shape[-1] != state.dim:
        raise ValidationError(f"input dimension {x.shape[-1]} != network dimension {state.dim}")
    out = _forward(state, np.atleast_2d(x))
    return float(out[0]) if x.ndim == 1 else out


def _step_arrays(a, b, a0, b0, x, y, eta, lam, activation):
    M = a.shape[0]
    pre = b @ x
    h, hp = ACTIVATIONS[activation].both(pre)
    contrib = a * h
    if M % 2 == 0:
        contrib = contrib.reshape(M // 2, 2).sum(axis=-1)
    g = contrib.sum() / np.sqrt(M)
    coef = eta / np.sqrt(M) * (g - y)
    shrink = 1.0 - eta * lam
    a_new = a0 + shrink * (a - a0) - coef * h
    b_new = b0 + shrink * (b - b0) - (coef * a * hp)[:, None] * x[None, :]
    return a_new, b_new


def asgd_step(state: NetworkState, x, y, eta, lam) -> NetworkState:
    """One regularised SGD step on the sample ``(x, y)``.

    Both layers move by ``-eta`` times the gradient of
    ``0.5 * (y - g(x))**2 + 0.5 * lam * ||Theta - Theta0||**2`` at the current state.
    """
    x = check_unit_rows(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise ValidationError("asgd_step takes a single sample")
    check_scalar(eta, "eta", min_val=0)
    check_scalar(lam, "lam", min_val=0)
    a, b = _step_arrays(state.a, state.b, state.a0, state.b0, x, float(y), eta, lam,
                        state.activation)
    return state.with_params(a, b)


def run_asgd(state: NetworkState, sampler, T, eta, lam):
    """Run ``T`` ASGD steps and return ``(final_state, averaged_state)``.

    ``sampler(T)`` must return arrays ``(X, y)`` with ``T`` rows.  The average is
    the uniform mean of the parameters at steps ``0..T``.
    """
    T = check_scalar(T, "T", min_val=0, integer=True)
    check_scalar(eta, "eta", min_val=0)
    check_scalar(lam, "lam", min_val=0)
    a, b = state.a.copy(), state.b.copy()
    # deviations from the snapshot are summed, so an unmoved network averages exactly
    sum_a, sum_b = a - state.a0, b - state.b0
    if T > 0:
        X, Y = sampler(T)
        X = check_unit_rows(np.asarray(X, dtype=np.float64))
        Y = np.asarray(Y, dtype=np.float64)
        if X.shape[0] < T or Y.shape[0] < T:
            raise ValidationError("sampler returned fewer than T samples")
        for t in range(T):
            a, b = _step_arrays(a, b, state.a0, state.b0, X[t], Y[t], eta, lam,
                                state.activation)
            sum_a += a - state.a0
            sum_b += b - state.b0
    final = state.with_params(a, b)
    averaged = state.with_params(state.a0 + sum_a / (T + 1), state.b0 + sum_b / (T + 1))
    return final, averaged


def regularized_risk(state: NetworkState, x, y, lam):
    """Single-sample objective ``0.5 * (y - g)**2 + 0.5 * lam * ||Theta - Theta0||**2``."""
    g = _forward(state, np.atleast_2d(x))[0]
    reg = np.sum((state.a - state.a0) ** 2) + np.sum((state.b - state.b0) ** 2)
    return 0.5 * (y - g) ** 2 + 0.5 * lam * reg
