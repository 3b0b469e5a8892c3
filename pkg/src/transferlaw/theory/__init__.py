"""Two-layer network ASGD, its kernels, synthetic targets and transfer simulations."""
from .experiment import TargetSpec, TransferConfig, TransferResult, build_targets, prop_a_gap, transfer_experiment
from .functions import FourierFunction, KernelExpansion, l2_error, make_target, reference_asgd, regularized_target
from .kernels import (
    KernelSpec,
    SpectrumReport,
    designed_kernel_eval,
    ntk_eval,
    rf_kernel_eval,
    spectrum,
)
from .network import NetworkState, asgd_step, init_network, network_eval, run_asgd
from .rates import bound_terms, optimal_lambda0, pretrain_rate, rate_predict

__all__ = [
    "NetworkState", "init_network", "network_eval", "asgd_step", "run_asgd",
    "KernelSpec", "SpectrumReport", "ntk_eval", "rf_kernel_eval", "designed_kernel_eval",
    "spectrum", "FourierFunction", "KernelExpansion", "make_target", "regularized_target",
    "reference_asgd", "l2_error", "pretrain_rate", "optimal_lambda0", "bound_terms",
    "rate_predict", "TargetSpec", "TransferConfig", "TransferResult", "build_targets",
    "transfer_experiment", "prop_a_gap",
]
