"""Kernels of the two-layer model and their spectra.

Three backends share one :class:`KernelSpec` type:

* ``ntk-montecarlo``: the infinite-width tangent kernel, estimated by averaging
  over uniform draws of the input weights;
* ``random-feature``: the finite-width kernel ``k_M`` defined by the input rows
  of an initial network;
* ``designed-spectrum``: ``sum_{l<=L} scale * l**-xi * cos(l * (theta - theta'))``
  on the unit circle, whose eigenvalues under the uniform measure are known.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .._validation import check_scalar, check_unit_rows
from ..exceptions import ValidationError
from ..fit import fit_loglog_linear
from . import _circle
from .network import ACTIVATIONS, NetworkState

__all__ = [
    "KernelSpec",
    "SpectrumReport",
    "ntk_eval",
    "ntk_gram",
    "rf_kernel_eval",
    "rf_gram",
    "rf_features",
    "designed_kernel_eval",
    "spectrum",
]

_CHUNK = 1 << 10  # keeps the per-chunk temporaries in cache
_MODES = ("ntk-montecarlo", "random-feature", "designed-spectrum")


def _sphere_draws(seed, n, d, chunk=_CHUNK):
    rng = np.random.default_rng(seed)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        b = rng.standard_normal((m, d))
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        yield b
        done += m


def _pair_inputs(x, xp):
    x = check_unit_rows(x, "x")
    xp = check_unit_rows(xp, "xp")
    if x.shape != xp.shape:
        raise ValidationError(f"x and xp must have the same shape, got {x.shape} and {xp.shape}")
    return x, xp


def ntk_eval(x, xp, mc_samples, seed, activation="tanh", dtype=np.float64):
    """Monte Carlo estimate of the tangent kernel with its standard error.

    ``x`` and ``xp`` are single unit vectors or matching ``(N, d)`` arrays of
    pairs.  All pairs share the same weight draws, so the estimate is exactly
    symmetric in its arguments.  ``dtype=np.float32`` roughly triples the speed
    of long reference runs; sums are always accumulated in double precision.

    Returns
    -------
    value, stderr : float or ndarray
    """
    mc_samples = check_scalar(mc_samples, "mc_samples", min_val=2, integer=True)
    x, xp = _pair_inputs(x, xp)
    single = x.ndim == 1
    X, XP = np.atleast_2d(x), np.atleast_2d(xp)
    both = ACTIVATIONS[activation].both
    n = X.shape[0]
    dots = np.sum(X * XP, axis=1).astype(dtype)
    pts = np.concatenate([X, XP]).T.astype(dtype)
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    for b in _sphere_draws(seed, mc_samples, X.shape[1]):
        h, hp = both(b.astype(dtype) @ pts)
        f = h[:, :n] * h[:, n:]
        f += dots * (hp[:, :n] * hp[:, n:])
        s1 += f.sum(axis=0, dtype=np.float64)
        s2 += np.einsum("ij,ij->j", f, f, dtype=np.float64)
    mean = s1 / mc_samples
    var = np.maximum(s2 - mc_samples * mean**2, 0.0) / (mc_samples - 1)
    se = np.sqrt(var / mc_samples)
    if single:
        return float(mean[0]), float(se[0])
    return mean, se


def ntk_gram(X, Y, mc_samples, seed, activation="tanh"):
    """Monte Carlo tangent-kernel Gram matrix between the rows of X and Y."""
    mc_samples = check_scalar(mc_samples, "mc_samples", min_val=2, integer=True)
    X = np.atleast_2d(check_unit_rows(X, "X"))
    Y = np.atleast_2d(check_unit_rows(Y, "Y"))
    both = ACTIVATIONS[activation].both
    k0 = np.zeros((X.shape[0], Y.shape[0]))
    k1 = np.zeros_like(k0)
    for b in _sphere_draws(seed, mc_samples, X.shape[1]):
        hx, hpx = both(b @ X.T)
        hy, hpy = both(b @ Y.T)
        k0 += hx.T @ hy
        k1 += hpx.T @ hpy
    return (k0 + (X @ Y.T) * k1) / mc_samples


def rf_features(state0: NetworkState, X):
    """Feature map with ``rf_features(X) @ rf_features(Y).T == k_M(X, Y)``.

    Uses the snapshot rows ``b0``; columns are ``sigma(b.x)/sqrt(M)`` followed by
    ``sigma'(b.x) * x / sqrt(M)``.
    """
    X = np.atleast_2d(X)
    first, hp = ACTIVATIONS[state0.activation].both(X @ state0.b0.T)
    M = state0.width
    second = (hp[:, :, None] * X[:, None, :]).reshape(X.shape[0], M * X.shape[1])
    return np.concatenate([first, second], axis=1) / np.sqrt(M)


def rf_gram(state0: NetworkState, X, Y):
    """Random-feature kernel Gram matrix between the rows of X and Y."""
    X = np.atleast_2d(check_unit_rows(X, "X"))
    Y = np.atleast_2d(check_unit_rows(Y, "Y"))
    both = ACTIVATIONS[state0.activation].both
    hx, hpx = both(X @ state0.b0.T)
    hy, hpy = both(Y @ state0.b0.T)
    return (hx @ hy.T + (X @ Y.T) * (hpx @ hpy.T)) / state0.width


def rf_kernel_eval(state0: NetworkState, x, xp):
    """Finite-width kernel ``k_M(x, x')`` built from the snapshot rows ``b0``."""
    x, xp = _pair_inputs(x, xp)
    both = ACTIVATIONS[state0.activation].both
    X, XP = np.atleast_2d(x), np.atleast_2d(xp)
    h, hp = both(X @ state0.b0.T)
    hq, hpq = both(XP @ state0.b0.T)
    dots = np.sum(X * XP, axis=1)
    val = (np.sum(h * hq, axis=1) + dots * np.sum(hp * hpq, axis=1)) / state0.width
    return float(val[0]) if x.ndim == 1 else val


def _check_designed(xi, L, scale=1.0):
    xi = check_scalar(xi, "xi", min_val=1, include_min=False)
    L = check_scalar(L, "L", min_val=1, integer=True)
    scale = check_scalar(scale, "scale", min_val=0, include_min=False)
    return xi, L, scale


def designed_eigenvalues(xi, L, scale=1.0):
    """Per-frequency eigenvalues ``scale * l**-xi / 2`` for ``l = 1..L``."""
    xi, L, scale = _check_designed(xi, L, scale)
    ell = np.arange(1, L + 1, dtype=np.float64)
    return scale * ell**-xi / 2


def designed_kernel_eval(xi, L, theta, thetap, scale=1.0):
    """``sum_{l=1..L} scale * l**-xi * cos(l * (theta - thetap))``; angles broadcast."""
    xi, L, scale = _check_designed(xi, L, scale)
    diff = np.asarray(theta, dtype=np.float64) - np.asarray(thetap, dtype=np.float64)
    ell = np.arange(1, L + 1, dtype=np.float64)
    weights = scale * ell**-xi
    val = np.cos(np.multiply.outer(diff, ell)) @ weights
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Which kernel to use and the parameters it needs.

    Build instances with :meth:`ntk`, :meth:`random_feature` or :meth:`designed`.
    """

    mode: str
    mc_samples: Optional[int] = None
    seed: Optional[int] = None
    d: int = 2
    state: Optional[NetworkState] = None
    xi: Optional[float] = None
    L: Optional[int] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValidationError(f"unknown kernel mode {self.mode!r}; expected one of {_MODES}")
        if self.mode == "ntk-montecarlo":
            check_scalar(self.mc_samples, "mc_samples", min_val=2, integer=True)
            check_scalar(self.d, "d", min_val=1, integer=True)
        elif self.mode == "random-feature":
            if not isinstance(self.state, NetworkState):
                raise ValidationError("random-feature mode needs a NetworkState snapshot")
        else:
            _check_designed(self.xi, self.L, self.scale)

    @classmethod
    def ntk(cls, mc_samples, seed=0, d=2):
        return cls("ntk-montecarlo", mc_samples=mc_samples, seed=seed, d=d)

    @classmethod
    def random_feature(cls, state0):
        return cls("random-feature", state=state0)

    @classmethod
    def designed(cls, xi, L, scale=1.0):
        return cls("designed-spectrum", xi=xi, L=L, scale=scale)

    @property
    def dim(self):
        if self.mode == "random-feature":
            return self.state.dim
        return 2 if self.mode == "designed-spectrum" else self.d

    def gram(self, X, Y):
        """Kernel matrix between two sets of unit vectors."""
        if self.mode == "ntk-montecarlo":
            return ntk_gram(X, Y, self.mc_samples, self.seed)
        if self.mode == "random-feature":
            return rf_gram(self.state, X, Y)
        X = np.atleast_2d(check_unit_rows(X, "X"))
        Y = np.atleast_2d(check_unit_rows(Y, "Y"))
        return designed_kernel_eval(self.xi, self.L, _circle.to_angles(X)[:, None],
                                    _circle.to_angles(Y)[None, :], self.scale)

    def to_dict(self):
        out = {"mode": self.mode}
        if self.mode == "ntk-montecarlo":
            out.update(mc_samples=self.mc_samples, seed=self.seed, d=self.d)
        elif self.mode == "random-feature":
            out.update(M=self.state.width, d=self.state.dim)
        else:
            out.update(xi=self.xi, L=self.L, scale=self.scale)
        return out


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalues of the kernel integral operator under the uniform measure.

    Attributes
    ----------
    eigenvalues : ndarray
        Positive eigenvalues in descending order, with multiplicity.
    fitted_xi : float
        Minus the log-log slope over ``fit_range`` (``nan`` if fewer than two points).
    fit_range : (int, int)
        Inclusive window used for the slope.  For the Fourier method it is a
        frequency window; for the Nystrom fallback an index window (1-based).
    method : str
        ``"fourier"`` or ``"nystrom"``.
    mode_eigenvalues : ndarray or None
        Fourier method only: eigenvalue of frequency ``l`` at index ``l``.
    """

    eigenvalues: np.ndarray
    fitted_xi: float
    fit_range: tuple
    method: str
    mode_eigenvalues: Optional[np.ndarray] = None

    @property
    def fallback(self):
        return self.method != "fourier"

    def to_dict(self):
        return {
            "method": self.method,
            "fitted_xi": self.fitted_xi,
            "fit_range": list(self.fit_range),
            "eigenvalues": self.eigenvalues.tolist(),
        }


_REL_FLOOR = 1e-10


def _decay_fit(x, values, floor):
    """Slope fit over the leading run of values above ``floor``."""
    keep = values > floor
    stop = len(values) if keep.all() else int(np.argmin(keep))
    if stop < 2:
        return float("nan"), (int(x[0]), int(x[max(stop - 1, 0)]))
    fit = fit_loglog_linear(x[:stop], values[:stop])
    return -fit.slope, (int(x[0]), int(x[stop - 1]))


def _fourier_spectrum(profile, Q, floor_abs=0.0):
    # profile[j] = k(0, 2*pi*j/Q); real and even for a stationary kernel
    coef = np.fft.rfft(profile).real / Q
    gammas = coef.copy()
    mult = np.full(len(coef), 2)
    mult[0] = 1
    mult[-1] = 1
    floor = max(_REL_FLOOR * np.abs(coef).max(), floor_abs)
    eig = np.repeat(coef, mult)
    eig = np.sort(eig[eig > floor])[::-1]
    ell = np.arange(len(coef))
    xi, window = _decay_fit(ell[1:], coef[1:], floor)
    return SpectrumReport(eig, xi, window, "fourier", gammas)


def _nystrom_spectrum(kernel: KernelSpec, Q, seed):
    d = kernel.dim
    if d == 2:
        pts = _circle.to_points(_circle.grid(Q))
    else:
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((Q, d))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    K = kernel.gram(pts, pts)
    K = 0.5 * (K + K.T)
    eig = np.linalg.eigvalsh(K / Q)[::-1]
    floor = _REL_FLOOR * max(eig[0], 0.0)
    eig = eig[eig > floor]
    idx = np.arange(1, len(eig) + 1)
    xi, window = _decay_fit(idx, eig, floor)
    return SpectrumReport(eig, xi, window, "nystrom")


def spectrum(kernel: KernelSpec, Q, seed=0) -> SpectrumReport:
    """Eigenvalues of the kernel operator under the uniform measure.

    Stationary kernels on the circle are handled exactly by an FFT of the profile
    ``k(0, .)`` on a uniform grid of ``Q`` angles.  Anything else (the
    finite-width kernel, inputs off the circle) falls back to the eigenvalues of
    the scaled Gram matrix on ``Q`` points; the report's ``method`` says which.
    """
    Q = check_scalar(Q, "Q", min_val=4, integer=True)
    if not _circle.is_power_of_two(Q):
        raise ValidationError(f"Q must be a power of two, got {Q}")
    if kernel.mode == "designed-spectrum":
        if Q < 4 * kernel.L:
            raise ValidationError(f"Q must be >= 4L = {4 * kernel.L}, got {Q}")
        delta = _circle.grid(Q)
        return _fourier_spectrum(designed_kernel_eval(kernel.xi, kernel.L, 0.0, delta,
                                                      kernel.scale), Q)
    if kernel.mode == "ntk-montecarlo" and kernel.d == 2:
        delta = _circle.grid(Q)
        e0 = np.tile([1.0, 0.0], (Q, 1))
        profile, se = ntk_eval(e0, _circle.to_points(delta), kernel.mc_samples, kernel.seed)
        # coefficients below the Monte Carlo noise level are not resolved
        noise = 3.0 * float(np.mean(se)) / np.sqrt(Q)
        return _fourier_spectrum(profile, Q, noise)
    return _nystrom_spectrum(kernel, Q, seed)
