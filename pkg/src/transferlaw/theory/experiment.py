"""Pre-train then fine-tune simulations producing ``(T0, T1, error)`` surfaces."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .._validation import check_scalar
from ..exceptions import AdmissibilityWarning, ValidationError
from ..law import Observation
from . import _circle
from .functions import FourierFunction, l2_error, make_target, reference_asgd
from .kernels import KernelSpec, rf_features, spectrum
from .network import _forward, _step_arrays, init_network, run_asgd
from .rates import admissible_eta1, optimal_lambda0, rate_predict

__all__ = ["TargetSpec", "TransferConfig", "TransferResult", "build_targets",
           "transfer_experiment", "prop_a_gap"]


@dataclass(frozen=True)
class TargetSpec:
    """Smoothness and shape of the pre-training target and of the residual ``phi1``.

    ``phi1_scale`` multiplies the residual target; 0 makes fine-tuning repeat
    the pre-training task.
    """

    r0: float = 1.0
    r1: float = 0.5
    profile0: Union[str, Sequence[float]] = "power:1"
    profile1: Union[str, Sequence[float]] = "power:1"
    phi1_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        check_scalar(self.r0, "r0", min_val=0.5, max_val=1.0)
        check_scalar(self.r1, "r1", min_val=0.5, max_val=1.0)
        check_scalar(self.phi1_scale, "phi1_scale", min_val=0)


@dataclass(frozen=True, eq=False)
class TransferConfig:
    """Grid, step sizes, regularisation and targets for :func:`transfer_experiment`.

    ``mode`` is ``"rkhs"`` (exact reference dynamics with ``kernel``) or
    ``"network"`` (the width-``M`` two-layer model; ``kernel`` then only shapes
    the targets).  ``lambda0="optimal"`` uses the rate-optimal pre-training
    value; ``lambda1="rate"`` uses the fine-tuning rule with the measured
    pre-training error.  ``eta1`` is ``eta1_const * T1**-zeta`` unless a fixed
    value is given.
    """

    T0: Sequence[int] = tuple(2**k for k in range(7, 13))
    T1: Sequence[int] = tuple(2**k for k in range(6, 11))
    eta0: float = 0.25
    eta1: Optional[float] = None
    zeta: float = 1.0 / 3.0
    eta1_const: float = 0.25
    lambda0: Union[float, str] = "optimal"
    lambda1: Union[float, str] = "rate"
    lambda1_const: float = 1.0
    mode: str = "rkhs"
    M: int = 1024
    d: int = 2
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec.designed(2.0, 64))
    targets: TargetSpec = field(default_factory=TargetSpec)
    seeds: Sequence[int] = tuple(range(8))
    eval_Q: int = 256
    check_admissibility: bool = True

    def __post_init__(self):
        object.__setattr__(self, "T0", tuple(int(t) for t in np.atleast_1d(self.T0)))
        object.__setattr__(self, "T1", tuple(int(t) for t in np.atleast_1d(self.T1)))
        object.__setattr__(self, "seeds", tuple(int(s) for s in np.atleast_1d(self.seeds)))
        if not self.T0 or not self.T1 or not self.seeds:
            raise ValidationError("T0, T1 and seeds must be non-empty")
        for name in ("T0", "T1"):
            if min(getattr(self, name)) < 0:
                raise ValidationError(f"{name} values must be >= 0")
        check_scalar(self.eta0, "eta0", min_val=0)
        if self.eta1 is not None:
            check_scalar(self.eta1, "eta1", min_val=0)
        check_scalar(self.zeta, "zeta", min_val=0, max_val=1, include_max=False)
        check_scalar(self.eta1_const, "eta1_const", min_val=0, include_min=False)
        if isinstance(self.lambda0, str):
            if self.lambda0 != "optimal":
                raise ValidationError(f"lambda0 must be a number or 'optimal', got {self.lambda0!r}")
        else:
            check_scalar(self.lambda0, "lambda0", min_val=0)
        if isinstance(self.lambda1, str):
            if self.lambda1 != "rate":
                raise ValidationError(f"lambda1 must be a number or 'rate', got {self.lambda1!r}")
        else:
            check_scalar(self.lambda1, "lambda1", min_val=0)
        check_scalar(self.lambda1_const, "lambda1_const", min_val=0, include_min=False)
        if self.mode not in ("rkhs", "network"):
            raise ValidationError(f"mode must be 'rkhs' or 'network', got {self.mode!r}")
        if self.mode == "rkhs" and self.kernel.mode != "designed-spectrum":
            raise ValidationError("rkhs mode runs the exact recursion and needs the designed kernel")
        check_scalar(self.M, "M", min_val=2, integer=True)
        if self.d != 2:
            raise ValidationError("only the circle geometry (d=2) is supported")
        check_scalar(self.eval_Q, "eval_Q", min_val=64, integer=True)

    @property
    def xi(self):
        if self.kernel.mode == "designed-spectrum":
            return self.kernel.xi
        return spectrum(self.kernel, 256).fitted_xi

    def eta1_for(self, T1):
        if self.eta1 is not None:
            return float(self.eta1)
        return self.eta1_const * max(T1, 1) ** -self.zeta

    def lambda0_for(self, T0):
        if self.lambda0 == "optimal":
            return optimal_lambda0(max(T0, 1), self.targets.r0, self.xi)
        return float(self.lambda0)

    def lambda1_for(self, T1, R0):
        if self.lambda1 == "rate":
            rule = rate_predict(self.targets.r0, self.targets.r1, self.xi, self.zeta)
            return rule.lambda1(max(T1, 1), max(R0, np.finfo(float).tiny), self.lambda1_const)
        return float(self.lambda1)

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "T0", "T1", "eta0", "eta1", "zeta", "eta1_const", "lambda0", "lambda1",
            "lambda1_const", "mode", "M", "d", "seeds", "eval_Q", "check_admissibility")}
        out["T0"], out["T1"], out["seeds"] = list(self.T0), list(self.T1), list(self.seeds)
        out["kernel"] = self.kernel.to_dict()
        out["targets"] = asdict(self.targets)
        return out


def build_targets(config: TransferConfig):
    """``(phi0, phi1)`` as Fourier functions, jointly scaled so ``|phi0 + phi1| <= 1``."""
    t = config.targets
    spec = config.kernel
    if spec.mode != "designed-spectrum":
        spec = spectrum(spec, max(256, config.eval_Q))
    phi0 = make_target(spec, t.r0, t.profile0, seed=t.seed)
    phi1 = make_target(spec, t.r1, t.profile1, seed=t.seed + 1)
    phi1 = FourierFunction(t.phi1_scale * phi1.cos, t.phi1_scale * phi1.sin,
                           source_norm=t.phi1_scale * phi1.source_norm, r=t.r1)
    bound = (phi0 + phi1).sup_bound()
    if bound > 1.0:
        k = 1.0 / bound
        phi0 = FourierFunction(k * phi0.cos, k * phi0.sin, k * phi0.source_norm, t.r0)
        phi1 = FourierFunction(k * phi1.cos, k * phi1.sin, k * phi1.source_norm, t.r1)
    return phi0, phi1


@dataclass(frozen=True)
class TransferResult:
    """Rows ``(T0, T1, seed, error)`` plus the run's settings per row."""

    rows: list
    config: TransferConfig

    COLUMNS = ("T0", "T1", "seed", "error", "R0", "lambda0", "lambda1", "eta1")

    def observations(self, group_by_seed=True):
        """Rows with ``T0, T1 >= 1`` as :class:`Observation` (``n=T0``, ``s=T1``)."""
        return [Observation(r["T0"], r["T1"], r["error"],
                            f"seed={r['seed']}" if group_by_seed else "")
                for r in self.rows if r["T0"] >= 1 and r["T1"] >= 1 and r["error"] > 0]

    def median_surface(self):
        """Dict ``(T0, T1) -> median error over seeds``."""
        cells = {}
        for r in self.rows:
            cells.setdefault((r["T0"], r["T1"]), []).append(r["error"])
        return {k: float(np.median(v)) for k, v in cells.items()}

    def median_observations(self):
        return [Observation(n, s, e, "median") for (n, s), e in sorted(self.median_surface().items())
                if n >= 1 and s >= 1 and e > 0]


def _streams(seed):
    init_ss, pre_ss, ft_ss = np.random.SeedSequence(seed).spawn(3)
    return (int(init_ss.generate_state(1)[0]), np.random.default_rng(pre_ss),
            np.random.default_rng(ft_ss))


def _angle_sampler(theta, target):
    def sampler(T):
        th = theta[:T]
        return _circle.to_points(th), target(th)
    return sampler


def _run_seed(config: TransferConfig, phi0, phi1, seed):
    phi = phi0 + phi1
    init_seed, rng_pre, rng_ft = _streams(seed)
    theta0 = rng_pre.uniform(0, 2 * np.pi, max(config.T0))
    theta1 = rng_ft.uniform(0, 2 * np.pi, max(config.T1))
    state0 = init_network(config.M, 2, init_seed) if config.mode == "network" else None
    rows = []
    for T0 in config.T0:
        lam0 = config.lambda0_for(T0)
        if config.mode == "rkhs":
            pre = reference_asgd(config.kernel, phi0, T0, config.eta0, lam0, None, theta0[:T0])
        else:
            _, pre = run_asgd(state0, _angle_sampler(theta0, phi0), T0, config.eta0, lam0)
        R0 = l2_error(phi0, pre, config.eval_Q)
        for T1 in config.T1:
            lam1 = config.lambda1_for(T1, R0)
            eta1 = config.eta1_for(T1)
            if config.check_admissibility and T1 > 0 and not admissible_eta1(eta1, lam1):
                warnings.warn(f"eta1={eta1:.4g} violates 4(6+lambda1)eta1 <= 1 "
                              f"(lambda1={lam1:.4g}, T1={T1})", AdmissibilityWarning,
                              stacklevel=3)
            if config.mode == "rkhs":
                out = reference_asgd(config.kernel, phi, T1, eta1, lam1, pre, theta1[:T1])
            else:
                # fine-tuning keeps the original initialisation as regularisation anchor
                _, out = run_asgd(pre, _angle_sampler(theta1, phi), T1, eta1, lam1)
            rows.append({"T0": T0, "T1": T1, "seed": seed,
                         "error": l2_error(phi, out, config.eval_Q), "R0": R0,
                         "lambda0": lam0, "lambda1": lam1, "eta1": eta1})
    return rows


def transfer_experiment(config: TransferConfig, executor=None) -> TransferResult:
    """Run every ``(T0, T1, seed)`` cell.

    Pre-training on ``phi0`` runs once per ``(T0, seed)``; each fine-tuning run
    on ``phi0 + phi1`` starts from its averaged result.  Sample streams for a
    seed are shared across cells (runs of different length use prefixes of the
    same stream).  ``executor`` may be any object with a ``map`` method;
    results are merged in seed order.
    """
    phi0, phi1 = build_targets(config)
    mapper = map if executor is None else executor.map
    per_seed = list(mapper(_run_seed, [config] * len(config.seeds), [phi0] * len(config.seeds),
                           [phi1] * len(config.seeds), config.seeds))
    rows = [row for chunk in per_seed for row in chunk]
    return TransferResult(rows, config)


def prop_a_gap(config: TransferConfig, M_list, T=200, eta=0.1, lam=0.01, grid=64):
    """Sup-norm gap between network ASGD and reference ASGD with the network's own kernel.

    For every width and seed both dynamics start at the zero function and see
    the same samples of ``phi0``; the gap is the maximum over steps ``0..T``
    and over ``grid`` equally spaced test angles.

    Returns
    -------
    ndarray of shape ``(len(M_list), len(config.seeds))``
    """
    T = check_scalar(T, "T", min_val=0, integer=True)
    phi0, _ = build_targets(config)
    G = _circle.to_points(_circle.grid(grid))
    gaps = np.zeros((len(M_list), len(config.seeds)))
    for i, M in enumerate(M_list):
        for j, seed in enumerate(config.seeds):
            init_seed, rng, _ = _streams(seed)
            state = init_network(int(M), 2, init_seed)
            theta = rng.uniform(0, 2 * np.pi, T)
            X, Y = _circle.to_points(theta), phi0(theta)
            phi_x = rf_features(state, X)
            phi_g = rf_features(state, G)
            v = np.zeros(phi_x.shape[1])
            a, b = state.a, state.b
            shrink = 1.0 - eta * lam
            gap = 0.0
            for t in range(T):
                resid = phi_x[t] @ v - Y[t]
                v = shrink * v - eta * resid * phi_x[t]
                a, b = _step_arrays(a, b, state.a0, state.b0, X[t], Y[t], eta, lam,
                                    state.activation)
                net = _forward(state.with_params(a, b), G)
                gap = max(gap, float(np.max(np.abs(net - phi_g @ v))))
            gaps[i, j] = gap
    return gaps
