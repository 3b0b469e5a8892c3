"""Closed-form scaling laws for fine-tuning error.

Two models are provided:

* the simple law ``L(n) = D * n**-alpha + C`` for a fixed fine-tuning size, and
* the full law ``L(n, s) = delta * (n**-alpha + gamma) * s**-beta + eps_irr``.

Parameters are validated once, at construction; the evaluation functions are
vectorised and do no per-call validation beyond the sample-count bounds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar
from .exceptions import ValidationError

__all__ = [
    "Observation",
    "SimpleLawParams",
    "FullLawParams",
    "simple_law_eval",
    "full_law_eval",
    "reduce_full_to_simple",
    "neg_power",
]


@dataclass(frozen=True)
class Observation:
    """One learning-curve point.

    Parameters
    ----------
    n : int
        Pre-training sample count (>= 1).
    s : int
        Fine-tuning sample count (>= 1).
    error : float
        Observed test error, strictly positive.
    group : str
        Free-form tag (dataset, task, model...).
    """

    n: float
    s: float
    error: float
    group: str = ""

    def __post_init__(self):
        check_scalar(self.n, "n", min_val=1)
        check_scalar(self.s, "s", min_val=1)
        err = check_scalar(self.error, "error")
        if err <= 0:
            raise ValidationError(
                f"error must be strictly positive for log-space fitting, got {err!r}"
            )


@dataclass(frozen=True)
class SimpleLawParams:
    """Parameters of ``D * n**-alpha + C``."""

    alpha: float
    D: float
    C: float

    def __post_init__(self):
        # alpha == 0 is allowed so the degenerate (n-independent) law is representable.
        check_scalar(self.alpha, "alpha", min_val=0)
        check_scalar(self.D, "D", min_val=0, include_min=False)
        check_scalar(self.C, "C", min_val=0)

    def as_dict(self):
        return {"alpha": float(self.alpha), "D": float(self.D), "C": float(self.C)}


@dataclass(frozen=True)
class FullLawParams:
    """Parameters of ``delta * (n**-alpha + gamma) * s**-beta + eps_irr``."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    eps_irr: float = 0.0

    def __post_init__(self):
        check_scalar(self.alpha, "alpha", min_val=0)
        check_scalar(self.beta, "beta", min_val=0)
        check_scalar(self.gamma, "gamma", min_val=0)
        check_scalar(self.delta, "delta", min_val=0, include_min=False)
        check_scalar(self.eps_irr, "eps_irr", min_val=0)

    def as_dict(self):
        return {
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "gamma": float(self.gamma),
            "delta": float(self.delta),
            "eps_irr": float(self.eps_irr),
        }


def neg_power(x, rate):
    """``x**-rate`` computed as ``exp(-rate * log x)``."""
    return np.exp(-rate * np.log(x))


def _check_counts(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 1):
        raise ValidationError(f"{name} must be >= 1, got {x!r}")
    return arr


def _maybe_scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def simple_law_eval(p: SimpleLawParams, n):
    """Evaluate ``D * n**-alpha + C`` at one or many pre-training sizes."""
    n = _check_counts(n, "n")
    return _maybe_scalar(p.D * neg_power(n, p.alpha) + p.C)


def full_law_eval(p: FullLawParams, n, s):
    """Evaluate the full law at ``(n, s)``; arrays broadcast."""
    n = _check_counts(n, "n")
    s = _check_counts(s, "s")
    value = p.delta * (neg_power(n, p.alpha) + p.gamma) * neg_power(s, p.beta) + p.eps_irr
    return _maybe_scalar(value)


def reduce_full_to_simple(p: FullLawParams, s) -> SimpleLawParams:
    """Fold the fine-tuning size into the simple-law coefficients.

    ``D = delta * s**-beta`` and ``C = delta * gamma * s**-beta + eps_irr``, so that
    ``simple_law_eval(reduce_full_to_simple(p, s), n) == full_law_eval(p, n, s)``.
    """
    s = float(_check_counts(s, "s"))
    D = float(p.delta * neg_power(s, p.beta))
    return SimpleLawParams(alpha=p.alpha, D=D, C=D * p.gamma + p.eps_irr)
