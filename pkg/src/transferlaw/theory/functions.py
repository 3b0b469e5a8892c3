"""Function representations on the circle, synthetic targets and reference ASGD."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .._validation import as_float_array, check_scalar, check_unit_rows
from ..exceptions import ValidationError
from . import _circle
from .kernels import KernelSpec, SpectrumReport, designed_eigenvalues, rf_features
from .network import NetworkState, network_eval

__all__ = [
    "FourierFunction",
    "KernelExpansion",
    "make_target",
    "regularized_target",
    "reference_asgd",
    "l2_error",
    "mode_eigenvalues",
]

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class FourierFunction:
    """``f(theta) = sum_l cos_l * sqrt2 cos(l theta) + sin_l * sqrt2 sin(l theta)``, ``l = 1..L``.

    The basis is orthonormal under the uniform measure, so the squared L2 norm
    is the sum of squared coefficients.  ``source_norm`` and ``r`` record the
    source-condition norm when the function was built by :func:`make_target`.
    """

    cos: np.ndarray
    sin: np.ndarray
    source_norm: Optional[float] = None
    r: Optional[float] = None

    def __post_init__(self):
        c = as_float_array(self.cos, "cos", ndim=1)
        s = as_float_array(self.sin, "sin", ndim=1)
        if c.shape != s.shape:
            raise ValidationError("cos and sin coefficient vectors must have equal length")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @classmethod
    def zeros(cls, L):
        return cls(np.zeros(L), np.zeros(L))

    @property
    def L(self):
        return self.cos.shape[0]

    def padded(self, L):
        if L < self.L:
            raise ValidationError(f"cannot truncate {self.L} modes to {L}")
        pad = L - self.L
        return np.pad(self.cos, (0, pad)), np.pad(self.sin, (0, pad))

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        arg = np.multiply.outer(theta, np.arange(1, self.L + 1))
        val = _SQRT2 * (np.cos(arg) @ self.cos + np.sin(arg) @ self.sin)
        return float(val) if np.ndim(val) == 0 else val

    def at_points(self, X):
        return self(_circle.to_angles(X))

    def _combine(self, other, sign):
        L = max(self.L, other.L)
        c1, s1 = self.padded(L)
        c2, s2 = other.padded(L)
        return FourierFunction(c1 + sign * c2, s1 + sign * s2)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, k):
        return FourierFunction(k * self.cos, k * self.sin)

    __rmul__ = __mul__

    def l2_norm_sq(self):
        return float(np.sum(self.cos**2) + np.sum(self.sin**2))

    def sup_bound(self):
        """Upper bound on ``sup |f|`` from the per-mode amplitudes."""
        return float(_SQRT2 * np.sum(np.hypot(self.cos, self.sin)))

    def to_dict(self):
        return {"basis": "fourier", "cos": self.cos.tolist(), "sin": self.sin.tolist(),
                "source_norm": self.source_norm, "r": self.r}


@dataclass(frozen=True, eq=False)
class KernelExpansion:
    """``g(x) = base_coef * base(x) + sum_j weights[j] * k(x, anchors[j])``.

    ``base`` is an optional starting function (any callable on unit vectors,
    a :class:`FourierFunction` or another expansion).
    """

    kernel: KernelSpec
    anchors: np.ndarray
    weights: np.ndarray
    base: Optional[object] = None
    base_coef: float = 1.0

    def __post_init__(self):
        anchors = np.atleast_2d(as_float_array(self.anchors, "anchors"))
        weights = as_float_array(self.weights, "weights", ndim=1)
        if anchors.shape[0] != weights.shape[0]:
            raise ValidationError(
                f"{weights.shape[0]} weights for {anchors.shape[0]} anchors")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "weights", weights)

    def __call__(self, X):
        X = np.atleast_2d(check_unit_rows(X, "X"))
        out = np.zeros(X.shape[0])
        if len(self.weights):
            out += self.kernel.gram(X, self.anchors) @ self.weights
        if self.base is not None and self.base_coef != 0.0:
            out += self.base_coef * _values_at(self.base, X)
        return out


def _values_at(f, X):
    """Evaluate any supported representation at unit vectors X."""
    if isinstance(f, FourierFunction):
        return f.at_points(X)
    if isinstance(f, NetworkState):
        return network_eval(f, X)
    if isinstance(f, KernelExpansion) or callable(f):
        return np.asarray(f(X), dtype=np.float64)
    raise ValidationError(f"unsupported function representation {type(f).__name__}")


def mode_eigenvalues(spec, L=None):
    """Per-frequency eigenvalues ``gamma_1..gamma_L`` from a designed kernel or a Fourier report."""
    if isinstance(spec, KernelSpec):
        if spec.mode != "designed-spectrum":
            raise ValidationError("only the designed-spectrum kernel has closed-form eigenvalues; "
                                  "pass its SpectrumReport instead")
        gam = designed_eigenvalues(spec.xi, spec.L, spec.scale)
    elif isinstance(spec, SpectrumReport):
        if spec.mode_eigenvalues is None:
            raise ValidationError("spectrum has no per-frequency eigenvalues (Nystrom fallback)")
        gam = spec.mode_eigenvalues[1:]
    else:
        raise ValidationError(f"expected KernelSpec or SpectrumReport, got {type(spec).__name__}")
    if L is not None:
        gam = gam[:L]
    return np.asarray(gam, dtype=np.float64)


def _profile(profile, L, rng):
    if isinstance(profile, str):
        if profile == "first":
            c, s = np.zeros(L), np.zeros(L)
            c[0] = 1.0
            return c, s
        if profile.startswith("power:"):
            p = float(profile.split(":", 1)[1])
            amp = np.arange(1, L + 1, dtype=np.float64) ** -p
            phase = rng.uniform(0, 2 * np.pi, L)
            return amp * np.cos(phase), amp * np.sin(phase)
        raise ValidationError(f"unknown profile {profile!r}; use 'first', 'power:<p>' or an array")
    arr = as_float_array(profile, "profile")
    if arr.ndim == 1:
        arr = np.stack([arr, np.zeros_like(arr)])
    if arr.ndim != 2 or arr.shape[0] != 2:
        raise ValidationError("profile array must have shape (L,) or (2, L)")
    if arr.shape[1] > L:
        raise ValidationError(f"profile has {arr.shape[1]} modes but the spectrum only {L}")
    return np.pad(arr[0], (0, L - arr.shape[1])), np.pad(arr[1], (0, L - arr.shape[1]))


def make_target(spec, r, profile="first", seed=0, L=None) -> FourierFunction:
    """Target in the range of ``Sigma**r``: coefficients ``gamma_l**r * c_l``.

    ``profile`` is ``"first"`` (only the first cosine mode), ``"power:p"``
    (amplitudes ``l**-p`` with seeded random phases) or an explicit coefficient
    array.  If the resulting function can exceed 1 in absolute value it is scaled
    down, and the stored ``source_norm`` is scaled with it.
    """
    r = check_scalar(r, "r", min_val=0.5, max_val=1.0)
    gam = mode_eigenvalues(spec, L)
    if np.any(gam <= 0):
        raise ValidationError("eigenvalues must be positive to build a source-condition target")
    c, s = _profile(profile, len(gam), np.random.default_rng(seed))
    weight = gam**r
    f = FourierFunction(weight * c, weight * s)
    norm = float(np.sqrt(np.sum(c**2) + np.sum(s**2)))
    scale = 1.0
    bound = f.sup_bound()
    if bound > 1.0:
        scale = 1.0 / bound
    return FourierFunction(scale * f.cos, scale * f.sin, source_norm=scale * norm, r=r)


def regularized_target(spec, target: FourierFunction, lam) -> FourierFunction:
    """``(Sigma + lam)^-1 Sigma target``: coefficients times ``gamma_l / (gamma_l + lam)``."""
    lam = check_scalar(lam, "lambda", min_val=0, include_min=False)
    if not isinstance(target, FourierFunction):
        raise ValidationError("regularized_target needs a Fourier representation")
    gam = mode_eigenvalues(spec)
    L = target.L
    g = np.zeros(L)
    m = min(L, len(gam))
    g[:m] = gam[:m]
    shrink = g / (g + lam)
    return FourierFunction(shrink * target.cos, shrink * target.sin)


def _target_values(target, theta):
    if isinstance(target, FourierFunction):
        return target(theta)
    return _values_at(target, _circle.to_points(theta))


def _reference_designed(kernel, target, T, eta, lam, init, theta):
    if init is not None and not isinstance(init, FourierFunction):
        raise ValidationError("designed-spectrum mode needs a Fourier-mode initial function")
    L = max(kernel.L, init.L if init is not None else 0,
            target.L if isinstance(target, FourierFunction) else 0)
    c, s = init.padded(L) if init is not None else (np.zeros(L), np.zeros(L))
    c, s = c.copy(), s.copy()
    step = np.zeros(L)
    # k(., x_t) = sum_l (scale l**-xi / sqrt2) [cos(l x_t) sqrt2 cos + sin(l x_t) sqrt2 sin]
    step[:kernel.L] = designed_eigenvalues(kernel.xi, kernel.L, kernel.scale) * _SQRT2
    c0, s0 = c.copy(), s.copy()
    # deviations from the start are summed, so an unmoved function averages exactly
    sum_c, sum_s = np.zeros(L), np.zeros(L)
    if T:
        y = _target_values(target, theta)
        arg = np.multiply.outer(theta, np.arange(1, L + 1))
        cos_t, sin_t = np.cos(arg), np.sin(arg)
        shrink = 1.0 - eta * lam
        for t in range(T):
            resid = _SQRT2 * (c @ cos_t[t] + s @ sin_t[t]) - y[t]
            c *= shrink
            s *= shrink
            c -= eta * resid * step * cos_t[t]
            s -= eta * resid * step * sin_t[t]
            sum_c += c - c0
            sum_s += s - s0
    return FourierFunction(c0 + sum_c / (T + 1), s0 + sum_s / (T + 1))


def _geometric_sums(shrink, counts):
    """``sum_{k<n} shrink**k`` for each n in counts."""
    counts = np.asarray(counts, dtype=np.float64)
    if shrink == 1.0:
        return counts
    return (1.0 - shrink**counts) / (1.0 - shrink)


def _reference_rf(kernel, target, T, eta, lam, init, theta):
    if isinstance(init, KernelExpansion) and init.kernel is not kernel:
        raise ValidationError("initial expansion uses a different kernel")
    X = _circle.to_points(theta) if T else np.zeros((0, 2))
    shrink = 1.0 - eta * lam
    weights = np.zeros(T)
    if T:
        y = _target_values(target, theta)
        base_vals = _values_at(init, X) if init is not None else np.zeros(T)
        phi = rf_features(kernel.state, X)
        v = np.zeros(phi.shape[1])  # feature-space form of the kernel part
        coef = 1.0
        for t in range(T):
            w = -eta * (coef * base_vals[t] + phi[t] @ v - y[t])
            v *= shrink
            v += w * phi[t]
            coef *= shrink
            weights[t] = w
    # weight t enters at step t+1 and decays geometrically afterwards
    avg_w = weights * _geometric_sums(shrink, T - np.arange(T)) / (T + 1)
    avg_coef = float(_geometric_sums(shrink, T + 1)) / (T + 1) if init is not None else 0.0
    return KernelExpansion(kernel, X, avg_w, base=init, base_coef=avg_coef)


def reference_asgd(kernel: KernelSpec, target, T, eta, lam, init=None, seed=0):
    """Averaged SGD in the kernel's RKHS from ``init`` on uniform samples of the circle.

    Each step applies ``g <- (1 - eta lam) g - eta (g(x_t) - y_t) k(., x_t)``; the
    result is the uniform average of ``g^0..g^T``.  With the designed kernel the
    recursion is carried out exactly on Fourier coefficients; with the
    finite-width kernel the result is a kernel expansion over the visited points.
    ``seed`` may also be an array of ``T`` sample angles.
    """
    T = check_scalar(T, "T", min_val=0, integer=True)
    eta = check_scalar(eta, "eta", min_val=0)
    lam = check_scalar(lam, "lambda", min_val=0)
    theta = _sample_angles(seed, T)
    if kernel.mode == "designed-spectrum":
        return _reference_designed(kernel, target, T, eta, lam, init, theta)
    if kernel.mode == "random-feature":
        if isinstance(init, FourierFunction) or init is None or isinstance(init, KernelExpansion):
            return _reference_rf(kernel, target, T, eta, lam, init, theta)
        raise ValidationError(f"unsupported initial function {type(init).__name__}")
    raise ValidationError(f"reference ASGD is not available for kernel mode {kernel.mode!r}")


def _sample_angles(seed, T):
    if isinstance(seed, np.ndarray):
        if seed.shape != (T,):
            raise ValidationError(f"expected {T} sample angles, got shape {seed.shape}")
        return seed.astype(np.float64)
    return np.random.default_rng(seed).uniform(0.0, 2 * np.pi, T)


def l2_error(f, g, Q=256):
    """Squared L2 distance under the uniform measure on the circle.

    Uses the ``Q``-point trapezoid rule, which is exact for band-limited
    integrands once ``Q`` exceeds twice the bandwidth.  Accepts Fourier
    functions, kernel expansions, network states and callables on unit vectors.
    """
    Q = check_scalar(Q, "Q", min_val=64, integer=True)
    X = _circle.to_points(_circle.grid(Q))
    diff = _values_at(f, X) - _values_at(g, X)
    return float(np.mean(diff**2))
