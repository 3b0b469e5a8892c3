import warnings

import numpy as np
import pytest

from transferlaw import ValidationError
from transferlaw.exceptions import AdmissibilityWarning
from transferlaw.theory.experiment import (
    TargetSpec,
    TransferConfig,
    build_targets,
    prop_a_gap,
    transfer_experiment,
)
from transferlaw.theory.functions import l2_error, reference_asgd
from transferlaw.theory.kernels import KernelSpec


@pytest.fixture(scope="module")
def default_run():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdmissibilityWarning)
        return transfer_experiment(TransferConfig())


def surface(result):
    med = result.median_surface()
    T0s = sorted({k[0] for k in med})
    T1s = sorted({k[1] for k in med})
    return np.array([[med[(a, b)] for b in T1s] for a in T0s])


def test_targets_bounded():
    phi0, phi1 = build_targets(TransferConfig())
    assert (phi0 + phi1).sup_bound() <= 1.0 + 1e-12
    assert phi0.r == 1.0 and phi1.r == 0.5


def test_no_fine_tuning_reproduces_pretraining_error():
    cfg = TransferConfig(T0=(64, 256), T1=(0,), seeds=(0, 1),
                         targets=TargetSpec(phi1_scale=0.0))
    res = transfer_experiment(cfg)
    for row in res.rows:
        assert row["error"] == row["R0"]


def test_pretraining_beats_untrained_function():
    cfg = TransferConfig(T0=(128,), T1=(0,), seeds=(3,), targets=TargetSpec(phi1_scale=0.0))
    row = transfer_experiment(cfg).rows[0]
    assert row["R0"] > 0 and np.isfinite(row["R0"])
    phi0, _ = build_targets(cfg)
    # an untrained function has error equal to the target's squared norm
    assert row["R0"] < phi0.l2_norm_sq()


def test_skipping_pretraining_hurts_in_median():
    cfg = TransferConfig(T0=(0, 1024), T1=(64, 256))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdmissibilityWarning)
        A = surface(transfer_experiment(cfg))
    assert np.all(A[0] >= A[1])


def test_median_error_monotone_in_both_sizes(default_run):
    A = surface(default_run)
    assert np.all(np.diff(A, axis=0) <= 0), A
    assert np.all(np.diff(A, axis=1) <= 0), A


def test_rows_cover_grid_and_emit_observations(default_run):
    cfg = default_run.config
    assert len(default_run.rows) == len(cfg.T0) * len(cfg.T1) * len(cfg.seeds)
    obs = default_run.observations()
    assert len(obs) == len(default_run.rows)
    assert {o.group for o in obs} == {f"seed={s}" for s in cfg.seeds}
    assert all(o.n in cfg.T0 and o.s in cfg.T1 for o in obs)
    assert len(default_run.median_observations()) == len(cfg.T0) * len(cfg.T1)


def test_experiment_deterministic():
    cfg = TransferConfig(T0=(64,), T1=(32,), seeds=(5,), check_admissibility=False)
    a, b = transfer_experiment(cfg), transfer_experiment(cfg)
    assert a.rows == b.rows


def test_executor_merge_matches_serial():
    from concurrent.futures import ThreadPoolExecutor
    cfg = TransferConfig(T0=(64, 128), T1=(32,), seeds=(0, 1, 2), check_admissibility=False)
    with ThreadPoolExecutor(3) as ex:
        par = transfer_experiment(cfg, executor=ex)
    assert par.rows == transfer_experiment(cfg).rows


def test_inadmissible_rate_warns_not_fails():
    cfg = TransferConfig(T0=(32,), T1=(16,), seeds=(0,), eta1=0.5)
    with pytest.warns(AdmissibilityWarning, match="violates"):
        res = transfer_experiment(cfg)
    assert np.isfinite(res.rows[0]["error"])


def test_network_mode_runs():
    cfg = TransferConfig(T0=(32, 128), T1=(32,), seeds=(0, 1), mode="network", M=64,
                         check_admissibility=False)
    res = transfer_experiment(cfg)
    errs = [r["error"] for r in res.rows]
    assert all(np.isfinite(errs)) and all(e > 0 for e in errs)


def test_fixed_regularisation_used_verbatim():
    cfg = TransferConfig(T0=(64,), T1=(32,), seeds=(0,), lambda0=0.05, lambda1=0.02, eta1=0.01)
    row = transfer_experiment(cfg).rows[0]
    assert (row["lambda0"], row["lambda1"], row["eta1"]) == (0.05, 0.02, 0.01)


def test_fine_tune_starts_from_pretrained_average():
    cfg = TransferConfig(T0=(64,), T1=(0,), seeds=(0,))
    row = transfer_experiment(cfg).rows[0]
    assert row["error"] >= 0
    # with T1 = 0 the error is measured against phi0 + phi1 from the pre-trained function
    assert row["error"] != row["R0"]


@pytest.mark.parametrize("kwargs, match", [
    (dict(T0=()), "non-empty"),
    (dict(T1=(-1,)), ">= 0"),
    (dict(mode="other"), "mode"),
    (dict(lambda0="best"), "lambda0"),
    (dict(lambda1="best"), "lambda1"),
    (dict(d=3), "circle"),
    (dict(kernel=KernelSpec.ntk(64)), "designed"),
    (dict(zeta=1.0), "zeta"),
])
def test_config_validated(kwargs, match):
    with pytest.raises(ValidationError, match=match):
        TransferConfig(**kwargs)


def test_config_round_trips_to_dict():
    d = TransferConfig().to_dict()
    assert d["kernel"] == {"mode": "designed-spectrum", "xi": 2.0, "L": 64, "scale": 1.0}
    assert d["targets"]["r0"] == 1.0
    assert d["T0"] == [2**k for k in range(7, 13)]


def test_prop_a_gap_zero_steps():
    gaps = prop_a_gap(TransferConfig(seeds=(0, 1)), [16, 64], T=0)
    assert gaps.shape == (2, 2)
    assert np.all(gaps == 0.0)


def test_prop_a_gap_shrinks_with_width():
    gaps = prop_a_gap(TransferConfig(seeds=tuple(range(4))), [16, 256], T=50)
    med = np.median(gaps, axis=1)
    assert med[1] < med[0]


def test_reference_pretraining_converges():
    cfg = TransferConfig()
    phi0, _ = build_targets(cfg)
    errs = [l2_error(phi0, reference_asgd(cfg.kernel, phi0, T, 0.25, cfg.lambda0_for(T), seed=0))
            for T in (128, 1024, 8192)]
    assert errs[0] > errs[1] > errs[2]
