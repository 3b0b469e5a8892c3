"""Estimation of scaling-law parameters by least squares on log-residuals.

The objective for both laws is the unweighted sum of squared log-residuals
``sum_i (log L_i - log pred_i)**2``.  Positivity constraints are handled by
reparameterisation (``exp`` for rates and coefficients, ``softplus`` for the
floors), and the resulting unconstrained problem is solved with a damped
Gauss-Newton (Levenberg-Marquardt) iteration from several random starts.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from ._validation import as_float_array, check_scalar
from .exceptions import NonIdentifiableError, NonIdentifiableWarning, ValidationError
from .law import (
    FullLawParams,
    Observation,
    SimpleLawParams,
    full_law_eval,
    neg_power,
    simple_law_eval,
)

__all__ = [
    "DEFAULT_FIXED_D",
    "FitOptions",
    "FitReport",
    "LandscapeGrid",
    "Linearized",
    "LogLogFit",
    "StabilizeResult",
    "objective",
    "levenberg_marquardt",
    "fit_simple",
    "fit_full",
    "stabilize_D",
    "landscape",
    "standard_errors",
    "linearize",
    "fit_loglog_linear",
]

DEFAULT_FIXED_D = 0.48

# Lower bound reported for D when constant data drives it to zero.
D_FLOOR = 1e-12

_SIMPLE_NAMES = ("alpha", "D", "C")
_FULL_NAMES = ("alpha", "beta", "gamma", "delta", "eps_irr")
_TRANSFORMS = {
    "alpha": "log", "D": "log", "C": "softplus",
    "beta": "log", "gamma": "softplus", "delta": "log", "eps_irr": "softplus",
}


@dataclass(frozen=True)
class FitOptions:
    """Settings shared by the fitters.

    ``fixed_D`` defaults to 0.48; pass ``None`` for a free-D fit.  ``fixed_alpha``
    and ``fixed_C`` pin the other simple-law parameters (used by the
    stabilisation procedure and for one-parameter fits).
    """

    fixed_D: Optional[float] = DEFAULT_FIXED_D
    fixed_alpha: Optional[float] = None
    fixed_C: Optional[float] = None
    fix_eps_zero: bool = True
    multistart: int = 8
    tol: float = 1e-10
    max_iter: int = 500
    seed: int = 0

    def __post_init__(self):
        check_scalar(self.multistart, "multistart", min_val=1, integer=True)
        check_scalar(self.tol, "tol", min_val=0, include_min=False)
        check_scalar(self.max_iter, "max_iter", min_val=1, integer=True)
        check_scalar(self.seed, "seed", integer=True)
        if self.fixed_D is not None:
            check_scalar(self.fixed_D, "fixed_D", min_val=0, include_min=False)
        if self.fixed_alpha is not None:
            check_scalar(self.fixed_alpha, "fixed_alpha", min_val=0)
        if self.fixed_C is not None:
            check_scalar(self.fixed_C, "fixed_C", min_val=0)


@dataclass
class FitReport:
    """Outcome of a fit.

    ``stderr`` maps every parameter name to its standard error; parameters held
    fixed report 0.0 and non-identifiable ones ``inf``.
    """

    params: Union[SimpleLawParams, FullLawParams]
    stderr: dict
    residuals: np.ndarray
    objective: float
    converged: bool
    iterations: int
    free: tuple = ()
    r2_log: float = float("nan")
    nonidentifiable: bool = False
    restarts: int = 1

    @property
    def law(self):
        return "simple" if isinstance(self.params, SimpleLawParams) else "full"

    def to_dict(self):
        return {
            "law": self.law,
            "params": self.params.as_dict(),
            "stderr": {k: float(v) for k, v in self.stderr.items()},
            "free": list(self.free),
            "objective": float(self.objective),
            "r2_log": float(self.r2_log),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "restarts": int(self.restarts),
            "nonidentifiable": bool(self.nonidentifiable),
            "residuals": [float(r) for r in self.residuals],
        }


# ---------------------------------------------------------------------------
# observations and the objective
# ---------------------------------------------------------------------------

def _obs_arrays(obs: Sequence[Observation]):
    if len(obs) == 0:
        raise ValidationError("no observations given")
    n = np.array([o.n for o in obs], dtype=np.float64)
    s = np.array([o.s for o in obs], dtype=np.float64)
    y = np.array([o.error for o in obs], dtype=np.float64)
    if np.any(y <= 0):
        i = int(np.flatnonzero(y <= 0)[0])
        raise ValidationError(f"observation {i} has non-positive error {y[i]!r}")
    return n, s, y


def objective(obs: Sequence[Observation], pred) -> float:
    """Sum of squared log-residuals.

    ``pred`` is either a callable ``pred(n, s)`` returning predicted errors for
    arrays of sizes, or a sequence of predictions aligned with ``obs``.
    """
    n, s, y = _obs_arrays(obs)
    if callable(pred):
        p = np.asarray(pred(n, s), dtype=np.float64)
    else:
        p = np.asarray(pred, dtype=np.float64)
    p = np.broadcast_to(p, y.shape)
    bad = ~(p > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(
            f"non-positive prediction {p[i]!r} for observation {i} (n={n[i]:g}, s={s[i]:g})"
        )
    r = np.log(y) - np.log(p)
    return float(np.sum(r * r))


# ---------------------------------------------------------------------------
# Levenberg-Marquardt
# ---------------------------------------------------------------------------

class LMResult(NamedTuple):
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool


def levenberg_marquardt(residual: Callable, jacobian: Callable, x0, *, tol=1e-10,
                        max_iter=500, step_tol=1e-12, tau=1e-3, max_step=5.0,
                        cost_floor=1e-30, natural: Optional[Callable] = None) -> LMResult:
    """Minimise ``sum(residual(x)**2)`` by Levenberg-Marquardt.

    The damping term is ``mu * diag(J.T J)`` and ``mu`` follows Nielsen's
    gain-ratio update.  Iteration stops when an accepted step lowers the cost
    by a relative amount below ``tol``, when the step norm drops below
    ``step_tol``, or when the cost falls to ``cost_floor``.  If ``natural`` maps
    ``x`` to the natural parameters, the step norm is measured there, so a
    parameter sliding toward a zero bound counts as converged.

    Steps are clipped to ``max_step`` in every coordinate.  In log or softplus
    coordinates an unclipped Gauss-Newton step can throw a parameter so close
    to zero that its gradient vanishes and it never comes back.
    """
    x = np.array(x0, dtype=np.float64)
    r = residual(x)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return LMResult(x, cost, 0, False)
    J = jacobian(x)
    A = J.T @ J
    g = J.T @ r
    mu, nu = tau, 2.0
    for it in range(1, max_iter + 1):
        # Marquardt scaling: damp each direction by its own curvature
        diag = A.diagonal()
        scale = np.maximum(diag, 1e-12 * diag.max() + 1e-300)
        if cost <= cost_floor or np.abs(g).max() < 1e-30:
            return LMResult(x, cost, it - 1, True)
        try:
            step = np.linalg.solve(A + mu * np.diag(scale), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2.0
            continue
        big = np.abs(step).max()
        if big > max_step:
            step *= max_step / big
        x_new = x + step
        if natural is None:
            here, there = x, x_new
        else:
            here, there = natural(x), natural(x_new)
        dx = there - here
        if math.sqrt(dx @ dx) <= step_tol * (math.sqrt(here @ here) + step_tol):
            return LMResult(x, cost, it, True)
        r_new = residual(x_new)
        cost_new = float(r_new @ r_new)
        predicted = -(2.0 * step @ g + step @ A @ step)
        if np.isfinite(cost_new) and cost_new < cost and predicted > 0:
            rho = (cost - cost_new) / predicted
            rel = (cost - cost_new) / cost
            x, r, cost = x_new, r_new, cost_new
            J = jacobian(x)
            A = J.T @ J
            g = J.T @ r
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if rel < tol:
                return LMResult(x, cost, it, True)
        else:
            if mu * nu > 1e300:
                # no acceptable step at any damping: x is a minimum to working precision
                return LMResult(x, cost, it, True)
            mu *= nu
            nu *= 2.0
    return LMResult(x, cost, max_iter, False)


# ---------------------------------------------------------------------------
# law models: predictions and log-Jacobians in natural parameters
# ---------------------------------------------------------------------------

def _log_jac_simple(theta, n, jac=True):
    alpha, D, C = theta
    pw = neg_power(n, alpha)
    pred = D * pw + C
    if not jac:
        return pred, None
    J = np.empty((len(n), 3))
    J[:, 0] = -D * np.log(n) * pw / pred
    J[:, 1] = pw / pred
    J[:, 2] = 1.0 / pred
    return pred, J


def _log_jac_full(theta, n, s, jac=True):
    alpha, beta, gamma, delta, eps = theta
    pn = neg_power(n, alpha)
    ps = neg_power(s, beta)
    core = delta * (pn + gamma) * ps
    pred = core + eps
    if not jac:
        return pred, None
    J = np.empty((len(n), 5))
    J[:, 0] = -delta * np.log(n) * pn * ps / pred
    J[:, 1] = -np.log(s) * core / pred
    J[:, 2] = delta * ps / pred
    J[:, 3] = (pn + gamma) * ps / pred
    J[:, 4] = 1.0 / pred
    return pred, J


def _inverse(name, v):
    if _TRANSFORMS[name] == "log":
        return np.log(v)
    # softplus^-1(v) = log(expm1(v)), stable for small and large v
    v = max(v, 1e-300)
    return v + np.log(-np.expm1(-v))


class _Problem:
    """A law restricted to its free parameters, in unconstrained coordinates."""

    def __init__(self, names, fixed, log_jac, data):
        self.names = names
        self.fixed = dict(fixed)
        self.free = tuple(nm for nm in names if nm not in self.fixed)
        self.idx = np.array([names.index(nm) for nm in self.free], dtype=int)
        self.is_log = np.array([_TRANSFORMS[nm] == "log" for nm in self.free])
        self.base = np.array([self.fixed.get(nm, 0.0) for nm in names], dtype=np.float64)
        self.log_jac = log_jac
        self.data = data
        self.log_y = np.log(data[-1])

    def theta(self, u):
        theta = self.base.copy()
        theta[self.idx] = self.free_theta(u)
        return theta

    def free_theta(self, u):
        return np.where(self.is_log, np.exp(u), np.logaddexp(0.0, u))

    def encode(self, theta_free):
        return np.array([_inverse(nm, v) for nm, v in zip(self.free, theta_free)])

    def residual(self, u):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            pred, _ = self.log_jac(self.theta(u), *self.data[:-1], jac=False)
            return self.log_y - np.log(pred)

    def jacobian(self, u):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            _, J = self.log_jac(self.theta(u), *self.data[:-1])
            scale = np.where(self.is_log, np.exp(u), expit(u))
            return -J[:, self.idx] * scale


def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


# RMS log-residual treated as an exact fit; no restart can meaningfully beat it.
_EXACT_RMS = 1e-12


def _solve(problem: _Problem, starts, options: FitOptions):
    floor = len(problem.log_y) * _EXACT_RMS**2
    best = None
    for theta0 in starts:
        if best is not None and best.cost <= floor:
            break
        res = levenberg_marquardt(problem.residual, problem.jacobian, problem.encode(theta0),
                                  tol=options.tol, max_iter=options.max_iter, cost_floor=floor,
                                  natural=problem.free_theta)
        if not np.isfinite(res.cost):
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise NonIdentifiableError("every restart produced a non-finite objective")
    return best


def _r2_log(y, residuals):
    ly = np.log(y)
    sst = float(np.sum((ly - ly.mean()) ** 2))
    ssr = float(np.sum(residuals ** 2))
    if sst == 0.0:
        return 1.0 if ssr == 0.0 else 0.0
    return 1.0 - ssr / sst


# ---------------------------------------------------------------------------
# simple law
# ---------------------------------------------------------------------------

def _simple_fixed(options: FitOptions):
    fixed = {}
    if options.fixed_alpha is not None:
        fixed["alpha"] = float(options.fixed_alpha)
    if options.fixed_D is not None:
        fixed["D"] = float(options.fixed_D)
    if options.fixed_C is not None:
        fixed["C"] = float(options.fixed_C)
    return fixed


def fit_simple(obs: Sequence[Observation], options: FitOptions = FitOptions()) -> FitReport:
    """Fit ``D * n**-alpha + C`` to observations sharing one fine-tuning size.

    With default options D is held at 0.48 and only alpha and C are estimated.
    """
    n, s, y = _obs_arrays(obs)
    if np.unique(s).size != 1:
        raise ValidationError(
            f"simple-law fit needs a single fine-tuning size, got {np.unique(s).size} distinct s"
        )
    fixed = _simple_fixed(options)
    n_free = 3 - len(fixed)
    if n_free == 0:
        raise ValidationError("all simple-law parameters are fixed; nothing to fit")
    need = n_free
    if np.unique(n).size < need:
        raise ValidationError(
            f"need observations at >= {need} distinct n for {n_free} free parameters, "
            f"got {np.unique(n).size}"
        )
    constant = bool(np.ptp(y) == 0.0)

    problem = _Problem(_SIMPLE_NAMES, fixed, _log_jac_simple, (n, y))
    rng = np.random.default_rng(options.seed)
    ymax = float(y.max())
    starts = []
    for _ in range(options.multistart):
        draw = {
            "alpha": _log_uniform(rng, 0.05, 2.0),
            "D": _log_uniform(rng, 0.01, 10.0),
            "C": _log_uniform(rng, min(1e-4, 0.5 * ymax), ymax),
        }
        starts.append([draw[nm] for nm in problem.free])
    best = _solve(problem, starts, options)
    theta = problem.theta(best.x)
    params = SimpleLawParams(*(float(v) for v in theta))
    if constant and "D" in problem.free:
        # flat data carries no slope: D runs to its floor and C absorbs the level
        params = SimpleLawParams(alpha=params.alpha, D=max(min(params.D, D_FLOOR), D_FLOOR),
                                 C=float(y[0]) - D_FLOOR * float(np.mean(neg_power(n, params.alpha))))
    residuals = np.log(y) - np.log(simple_law_eval(params, n))
    report = FitReport(
        params=params,
        stderr={},
        residuals=residuals,
        objective=float(residuals @ residuals),
        converged=best.converged,
        iterations=best.iterations,
        free=problem.free,
        r2_log=_r2_log(y, residuals),
        restarts=options.multistart,
    )
    if constant:
        warnings.warn("all observed errors are identical; alpha and D are not identifiable",
                      NonIdentifiableWarning, stacklevel=2)
        report.nonidentifiable = True
        report.stderr = {nm: (0.0 if nm in fixed else (0.0 if nm == "C" else float("inf")))
                         for nm in _SIMPLE_NAMES}
        return report
    _attach_stderr(report, obs)
    return report


# ---------------------------------------------------------------------------
# full law
# ---------------------------------------------------------------------------

def fit_full(obs: Sequence[Observation], options: FitOptions = FitOptions()) -> FitReport:
    """Jointly fit ``delta * (n**-alpha + gamma) * s**-beta + eps_irr``.

    ``options.fix_eps_zero`` (default) pins the irreducible error at 0.
    """
    n, s, y = _obs_arrays(obs)
    missing = [ax for ax, v in (("n", n), ("s", s)) if np.unique(v).size < 2]
    if missing:
        raise ValidationError(
            "full-law fit needs >= 2 distinct values on each axis; degenerate axis: "
            + ", ".join(missing)
        )
    fixed = {"eps_irr": 0.0} if options.fix_eps_zero else {}
    n_free = 5 - len(fixed)
    if len(y) < n_free:
        raise ValidationError(f"need >= {n_free} observations, got {len(y)}")

    problem = _Problem(_FULL_NAMES, fixed, _log_jac_full, (n, s, y))
    rng = np.random.default_rng(options.seed)
    log_y = np.log(y)
    ymin = float(y.min())
    starts = []
    for _ in range(options.multistart):
        alpha = _log_uniform(rng, 0.05, 2.0)
        beta = _log_uniform(rng, 0.05, 2.0)
        gamma = _log_uniform(rng, 1e-4, 1.0)
        eps = 0.0 if options.fix_eps_zero else _log_uniform(rng, 1e-4 * ymin, 0.5 * ymin)
        # delta starts at its log-space least-squares value given the other draws
        shape = (neg_power(n, alpha) + gamma) * neg_power(s, beta)
        target = np.log(np.maximum(y - eps, 1e-3 * y))
        delta = float(np.exp(np.mean(target - np.log(shape))))
        draw = {"alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta, "eps_irr": eps}
        starts.append([draw[nm] for nm in problem.free])
    best = _solve(problem, starts, options)
    params = FullLawParams(*(float(v) for v in problem.theta(best.x)))
    residuals = log_y - np.log(full_law_eval(params, n, s))
    report = FitReport(
        params=params,
        stderr={},
        residuals=residuals,
        objective=float(residuals @ residuals),
        converged=best.converged,
        iterations=best.iterations,
        free=problem.free,
        r2_log=_r2_log(y, residuals),
        restarts=options.multistart,
    )
    _attach_stderr(report, obs)
    return report


# ---------------------------------------------------------------------------
# standard errors
# ---------------------------------------------------------------------------

def _attach_stderr(report: FitReport, obs):
    if not report.converged:
        report.stderr = {nm: float("nan") for nm in _names_of(report)}
        return
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report.stderr = standard_errors(report, obs)
    if any(issubclass(w.category, NonIdentifiableWarning) for w in caught):
        report.nonidentifiable = True
        warnings.warn("Jacobian is singular at the estimate; standard errors are infinite",
                      NonIdentifiableWarning, stacklevel=3)


def _names_of(report):
    return _SIMPLE_NAMES if isinstance(report.params, SimpleLawParams) else _FULL_NAMES


def standard_errors(report: FitReport, obs: Sequence[Observation]) -> dict:
    """Gauss-Newton standard errors of the free parameters.

    ``se_j = sqrt(s2 * inv(J.T @ J)[j, j])`` with ``J`` the Jacobian of the
    log-predictions at the estimate and ``s2 = SSR / (m - p)``.  Fixed
    parameters get 0.0; a singular ``J.T @ J`` gives ``inf`` and a warning.
    """
    if not report.converged:
        raise ValidationError("standard errors need a converged fit")
    n, s, y = _obs_arrays(obs)
    names = _names_of(report)
    theta = np.array([getattr(report.params, nm) for nm in names])
    if names is _SIMPLE_NAMES:
        pred, J = _log_jac_simple(theta, n)
    else:
        pred, J = _log_jac_full(theta, n, s)
    free = list(report.free)
    idx = [names.index(nm) for nm in free]
    J = J[:, idx]
    r = np.log(y) - np.log(pred)
    m, p = J.shape
    out = {nm: 0.0 for nm in names}
    inf = {nm: float("inf") for nm in free}
    if m <= p:
        warnings.warn("no residual degrees of freedom", NonIdentifiableWarning, stacklevel=2)
        out.update(inf)
        return out
    A = J.T @ J
    try:
        sv = np.linalg.svd(J, compute_uv=False)
        singular = not np.all(np.isfinite(J)) or sv[-1] <= sv[0] * 1e-10 or sv[-1] == 0.0
        cov = None if singular else np.linalg.inv(A)
    except np.linalg.LinAlgError:
        singular = True
    if singular:
        warnings.warn("J^T J is singular; parameters not identifiable", NonIdentifiableWarning,
                      stacklevel=2)
        out.update(inf)
        return out
    cov *= float(r @ r) / (m - p)
    for k, nm in enumerate(free):
        out[nm] = float(np.sqrt(max(cov[k, k], 0.0)))
    return out


# ---------------------------------------------------------------------------
# D stabilisation across groups
# ---------------------------------------------------------------------------

class StabilizeResult(NamedTuple):
    D_hat: float
    alpha_hat: float
    history: list
    converged: bool


def _lower_median(values):
    v = np.sort(np.asarray(values, dtype=np.float64))
    return float(v[(len(v) - 1) // 2])


def stabilize_D(groups: Sequence[Sequence[Observation]], *, init=0.5, tol=1e-3,
                max_rounds=100, options: FitOptions = FitOptions(fixed_D=None)) -> StabilizeResult:
    """Find a common D by alternating median updates across groups.

    Starting from ``alpha_hat = D_hat = init``, each round first fits every
    group with D held at ``D_hat`` and sets ``alpha_hat`` to the (lower) median
    of the fitted alphas; it then fits every group with alpha held at the new
    ``alpha_hat`` and sets ``D_hat`` to the median of the fitted Ds.  Iteration
    stops when both move by less than ``tol``.

    On data where C dominates, the objective has a long shallow valley and the
    updates creep along it; a tighter ``tol`` then needs many more rounds.

    A single group degenerates to that group's free fit.
    """
    if len(groups) == 0:
        raise ValidationError("stabilize_D needs at least one group")
    base = replace(options, fixed_D=None, fixed_alpha=None)
    if len(groups) == 1:
        rep = fit_simple(groups[0], base)
        hist = [{"round": 1, "alpha_hat": rep.params.alpha, "D_hat": rep.params.D,
                 "n_groups": 1}]
        return StabilizeResult(rep.params.D, rep.params.alpha, hist, rep.converged)

    def _estimates(which, opts, rnd):
        out = []
        for gi, grp in enumerate(groups):
            try:
                out.append(getattr(fit_simple(grp, opts).params, which))
            except (ValidationError, NonIdentifiableError) as exc:
                warnings.warn(f"group {gi} excluded from round {rnd}: {exc}", stacklevel=3)
        if not out:
            raise NonIdentifiableError(f"every group failed to fit in round {rnd}")
        return out

    alpha_hat = D_hat = float(init)
    history = []
    converged = False
    for rnd in range(1, max_rounds + 1):
        # sequential: alpha_hat is refreshed before it is used to estimate D
        alphas = _estimates("alpha", replace(base, fixed_D=D_hat), rnd)
        new_alpha = _lower_median(alphas)
        Ds = _estimates("D", replace(base, fixed_alpha=new_alpha), rnd)
        new_D = _lower_median(Ds)
        history.append({"round": rnd, "alpha_hat": new_alpha, "D_hat": new_D,
                        "n_groups": min(len(alphas), len(Ds))})
        done = abs(new_alpha - alpha_hat) < tol and abs(new_D - D_hat) < tol
        alpha_hat, D_hat = new_alpha, new_D
        if done:
            converged = True
            break
    return StabilizeResult(D_hat, alpha_hat, history, converged)


# ---------------------------------------------------------------------------
# loss landscape over (alpha, D)
# ---------------------------------------------------------------------------

@dataclass
class LandscapeGrid:
    """Profiled objective on an ``alpha x D`` grid (C minimised per cell)."""

    alpha_axis: np.ndarray
    D_axis: np.ndarray
    loss: np.ndarray
    C: np.ndarray
    argmin: tuple = field(default=())

    def ridge(self, rel_tol=0.05):
        """Cells on the valley floor within ``rel_tol`` of the global minimum.

        For each alpha row the best D is taken; rows whose best loss is within
        ``(1 + rel_tol) * min`` are returned as ``(alpha, D, loss)`` triples.
        """
        j = np.argmin(self.loss, axis=1)
        row_best = self.loss[np.arange(len(self.alpha_axis)), j]
        lim = (1.0 + rel_tol) * float(self.loss.min())
        keep = row_best <= lim
        return np.column_stack([self.alpha_axis[keep], self.D_axis[j[keep]], row_best[keep]])

    def to_dict(self):
        return {
            "alpha_axis": self.alpha_axis.tolist(),
            "D_axis": self.D_axis.tolist(),
            "loss": self.loss.tolist(),
            "C": self.C.tolist(),
            "argmin": {"alpha": self.argmin[0], "D": self.argmin[1], "C": self.argmin[2]},
        }


def _profile_C(a, log_y, c_hi, iters=200):
    """Minimise ``sum_i (log(a_i + C) - log_y_i)**2`` over ``0 <= C <= c_hi``.

    ``a`` has shape (..., m).  Vectorised bisection on the derivative; the
    derivative is non-negative at ``c_hi = max(y)``.
    """
    def dfdc(c):
        z = a + c[..., None]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.sum((np.log(z) - log_y) / z, axis=-1)

    shape = a.shape[:-1]
    lo = np.zeros(shape)
    hi = np.full(shape, float(c_hi))
    at_zero = dfdc(lo) >= 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = dfdc(mid) >= 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 1e-15 * c_hi):
            break
    c = np.where(at_zero, 0.0, 0.5 * (lo + hi))
    z = a + c[..., None]
    loss = np.sum((np.log(z) - log_y) ** 2, axis=-1)
    return c, loss


def landscape(obs: Sequence[Observation], alpha_range, D_range, n_alpha=61, n_D=61,
              *, log_D=False) -> LandscapeGrid:
    """Scan the simple-law objective over an ``alpha x D`` grid.

    C is minimised in closed interval ``[0, max error]`` for every cell.
    """
    n, s, y = _obs_arrays(obs)
    lo_a, hi_a = (float(v) for v in alpha_range)
    lo_d, hi_d = (float(v) for v in D_range)
    check_scalar(n_alpha, "n_alpha", min_val=1, integer=True)
    check_scalar(n_D, "n_D", min_val=1, integer=True)
    if not (0 <= lo_a <= hi_a) or not (0 < lo_d <= hi_d):
        raise ValidationError("ranges must be non-negative (D positive) and ascending")
    if (lo_a == hi_a and n_alpha > 1) or (lo_d == hi_d and n_D > 1):
        raise ValidationError("empty range for a multi-point axis")
    alpha_axis = np.linspace(lo_a, hi_a, n_alpha)
    D_axis = np.geomspace(lo_d, hi_d, n_D) if log_D else np.linspace(lo_d, hi_d, n_D)
    pw = neg_power(n[None, :], alpha_axis[:, None])              # (A, m)
    a = D_axis[None, :, None] * pw[:, None, :]                   # (A, Dn, m)
    C, loss = _profile_C(a, np.log(y), float(y.max()))
    i, j = np.unravel_index(int(np.argmin(loss)), loss.shape)
    return LandscapeGrid(alpha_axis, D_axis, loss, C,
                         (float(alpha_axis[i]), float(D_axis[j]), float(C[i, j])))


# ---------------------------------------------------------------------------
# linearisation and log-log regression
# ---------------------------------------------------------------------------

class Linearized(NamedTuple):
    n: np.ndarray
    excess: np.ndarray
    power_term: np.ndarray
    omitted: int


def linearize(obs: Sequence[Observation], p: SimpleLawParams) -> Linearized:
    """Subtract the fitted transfer gap from the observed errors.

    Returns ``(n, L - C)`` for every point where the difference is positive,
    the matching ``D * n**-alpha`` values, and how many points were dropped.
    """
    n, _, y = _obs_arrays(obs)
    excess = y - p.C
    keep = excess > 0
    return Linearized(n[keep], excess[keep], p.D * neg_power(n[keep], p.alpha),
                      int(np.count_nonzero(~keep)))


class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def fit_loglog_linear(xs, ys) -> LogLogFit:
    """Ordinary least squares of ``log y`` on ``log x``."""
    x = as_float_array(xs, "xs", ndim=1, positive=True)
    y = as_float_array(ys, "ys", ndim=1, positive=True)
    if x.shape != y.shape:
        raise ValidationError("xs and ys must have the same length")
    if x.size < 2 or np.ptp(x) == 0:
        raise ValidationError("need at least two distinct x values")
    lx, ly = np.log(x), np.log(y)
    xm, ym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - xm) ** 2))
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ssr = float(np.sum((ly - intercept - slope * lx) ** 2))
    sst = float(np.sum((ly - ym) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else (1.0 if ssr <= 1e-30 else 0.0)
    return LogLogFit(slope, intercept, r2)
