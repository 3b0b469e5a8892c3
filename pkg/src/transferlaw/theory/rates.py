"""Predicted convergence rates for pre-training and fine-tuning by ASGD.

The pre-training error decays as ``T0**-(2 r0 xi / (2 r0 xi + 1))`` with the
regularisation ``lambda0 = T0**-(xi / (2 r0 xi + 1))``.  For fine-tuning, the
bound is a sum of nine candidate terms in ``(T1, lambda1, eta1, R0)``; the
regime is selected by the smoothness indices ``r0`` (pre-training target) and
``r1`` (the residual target) and by the step-size exponent ``zeta`` in
``eta1 = T1**-zeta``.  ``R0`` is the pre-training error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .._validation import check_scalar

__all__ = [
    "pretrain_rate",
    "optimal_lambda0",
    "bound_terms",
    "BoundTerms",
    "rate_predict",
    "RatePrediction",
    "admissible_eta1",
    "boundary_report",
]

TERM_LABELS = ("a0", "a1", "b", "c", "d", "e", "f", "g", "h")


def _r(value, name):
    return check_scalar(value, name, min_val=0.5, max_val=1.0)


def _xi(value):
    return check_scalar(value, "xi", min_val=1, include_min=False)


def pretrain_rate(r0, xi):
    """Exponent ``2 r0 xi / (2 r0 xi + 1)`` of the pre-training error in ``T0``."""
    r0, xi = _r(r0, "r0"), _xi(xi)
    return 2 * r0 * xi / (2 * r0 * xi + 1)


def optimal_lambda0(T0, r0, xi):
    """Rate-optimal pre-training regularisation ``T0**-(xi / (2 r0 xi + 1))``."""
    T0 = check_scalar(T0, "T0", min_val=1)
    r0, xi = _r(r0, "r0"), _xi(xi)
    return T0 ** (-xi / (2 * r0 * xi + 1))


def admissible_eta1(eta1, lambda1):
    """Sufficient step-size condition ``4 (6 + lambda1) eta1 <= 1``."""
    return 4 * (6 + lambda1) * eta1 <= 1


@dataclass(frozen=True)
class BoundTerms:
    values: dict
    dominant: str

    def __getitem__(self, label):
        return self.values[label]


def bound_terms(T1, lambda1, eta1, xi, r0, r1, R0) -> BoundTerms:
    """The nine candidate terms of the fine-tuning bound and the largest one.

    ``a0 = l**2r0``, ``a1 = l**2r1``, ``b = R0/(T l)``, ``c = l**(2r1-1)/T``,
    ``d = 1/T``, ``e = R0/(T eta l)**2``, ``f = l**(2r1-2)/(T eta)**2``,
    ``g = 1/(T**2 eta**2 l)``, ``h = l**(-1/xi)/T`` with ``l = lambda1``, ``T = T1``.
    """
    T = check_scalar(T1, "T1", min_val=0, include_min=False)
    lam = check_scalar(lambda1, "lambda1", min_val=0, include_min=False)
    eta = check_scalar(eta1, "eta1", min_val=0, include_min=False)
    R0 = check_scalar(R0, "R0", min_val=0, include_min=False)
    xi, r0, r1 = _xi(xi), _r(r0, "r0"), _r(r1, "r1")
    opt = (T * eta) ** -2
    values = {
        "a0": lam ** (2 * r0),
        "a1": lam ** (2 * r1),
        "b": R0 / (T * lam),
        "c": lam ** (2 * r1 - 1) / T,
        "d": 1.0 / T,
        "e": opt * R0 / lam**2,
        "f": opt * lam ** (2 * r1 - 2),
        "g": opt / lam,
        "h": lam ** (-1.0 / xi) / T,
    }
    dominant = max(TERM_LABELS, key=values.__getitem__)
    return BoundTerms(values, dominant)


@dataclass(frozen=True)
class RatePrediction:
    """Selected regime with its regularisation rule and error exponents.

    The fine-tuning error behaves like ``T1**-T1_exponent * R0**R0_exponent`` when
    ``lambda1 = T1**-lambda1_T1_exponent * R0**lambda1_R0_exponent``.
    """

    case: str
    condition_ok: bool
    lambda1_T1_exponent: float
    lambda1_R0_exponent: float
    T1_exponent: float
    R0_exponent: float
    violated: tuple = field(default=())

    def lambda1(self, T1, R0, const=1.0):
        """Regularisation from the rule, times an optional constant."""
        return const * T1 ** -self.lambda1_T1_exponent * R0 ** self.lambda1_R0_exponent

    def T0_exponent(self, r0, xi):
        """Combined exponent of ``T0`` when ``R0`` follows the pre-training rate."""
        return self.R0_exponent * pretrain_rate(r0, xi)

    @property
    def lambda1_rule(self):
        return (f"lambda1 = T1^-{self.lambda1_T1_exponent:.6g} "
                f"* R0^{self.lambda1_R0_exponent:.6g}")

    def to_dict(self):
        return {
            "case": self.case,
            "condition_ok": self.condition_ok,
            "lambda1_rule": self.lambda1_rule,
            "lambda1_T1_exponent": self.lambda1_T1_exponent,
            "lambda1_R0_exponent": self.lambda1_R0_exponent,
            "T1_exponent": self.T1_exponent,
            "R0_exponent": self.R0_exponent,
            "violated": list(self.violated),
        }


def _case_I(r, zeta):
    return ((1 - zeta) / (r + 1), 1 / (2 * r + 2), 2 * r * (1 - zeta) / (r + 1), r / (r + 1))


def _case_II(r):
    e = 2 * r / (2 * r + 1)
    return (1 / (2 * r + 1), 1 / (2 * r + 1), e, e)


def rate_predict(r0, r1, xi, zeta) -> RatePrediction:
    """Pick the fine-tuning regime and return its rule and exponents.

    Regimes:

    * ``I-A``: ``r0 >= r1`` and ``zeta >= r1/(2r1+1)``;
    * ``I-B``: ``r0 < r1`` and ``zeta >= max(r0/(2r0+1), ((2r1-r0)xi+1-xi)/(2r1 xi+1))``;
    * ``II-A``: ``r0 >= r1`` and ``zeta <= r1/(2r1+1)``;
    * ``II-B``: ``r0 < r1 <= r0 + (xi-1)/(2xi)`` and ``zeta <= r0/(2r0+1)``.

    When no regime applies, the closest one by the ``r0``/``r1`` ordering and
    the ``zeta`` threshold is returned with ``condition_ok=False`` and the
    violated inequalities listed.
    """
    r0, r1, xi = _r(r0, "r0"), _r(r1, "r1"), _xi(xi)
    zeta = check_scalar(zeta, "zeta", min_val=0, max_val=1, include_max=False)
    if r0 >= r1:
        thr = r1 / (2 * r1 + 1)
        if zeta >= thr:
            return RatePrediction("I-A", True, *_case_I(r1, zeta))
        return RatePrediction("II-A", True, *_case_II(r1))
    thr_low = r0 / (2 * r0 + 1)
    thr_high = ((2 * r1 - r0) * xi + 1 - xi) / (2 * r1 * xi + 1)
    r1_cap = r0 + (xi - 1) / (2 * xi)
    if zeta >= max(thr_low, thr_high):
        return RatePrediction("I-B", True, *_case_I(r0, zeta))
    if zeta <= thr_low and r1 <= r1_cap:
        return RatePrediction("II-B", True, *_case_II(r0))
    violated = []
    if zeta <= thr_low:
        violated.append(f"r1 <= r0 + (xi-1)/(2xi) = {r1_cap:.6g} (r1 = {r1:.6g})")
        return RatePrediction("II-B", False, *_case_II(r0), violated=tuple(violated))
    violated.append(f"zeta >= {max(thr_low, thr_high):.6g} (zeta = {zeta:.6g})")
    return RatePrediction("I-B", False, *_case_I(r0, zeta), violated=tuple(violated))


def boundary_report(r0, r1, xi):
    """Compare the two regimes that meet at the ``zeta`` threshold.

    Returns a dict with the threshold and the exponents on each side; the
    ``T1`` exponents agree there, the ``R0`` exponents in general do not.
    """
    r0, r1, xi = _r(r0, "r0"), _r(r1, "r1"), _xi(xi)
    r = r1 if r0 >= r1 else r0
    zeta = r / (2 * r + 1)
    upper = _case_I(r, zeta)
    lower = _case_II(r)
    return {
        "zeta": zeta,
        "cases": ("I-A", "II-A") if r0 >= r1 else ("I-B", "II-B"),
        "T1_exponent": (upper[2], lower[2]),
        "R0_exponent": (upper[3], lower[3]),
        "T1_match": abs(upper[2] - lower[2]) <= 1e-12,
        "R0_match": abs(upper[3] - lower[3]) <= 1e-12,
    }
