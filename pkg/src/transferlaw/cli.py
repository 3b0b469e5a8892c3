"""Command-line interface.

Settings are resolved in this order (later wins): built-in defaults, the
command's section of the ``--config`` INI file, command-line flags.  The output
directory defaults to ``$TRANSFERLAW_OUT`` or ``./transferlaw-out``.

Every run writes a JSON report, any CSV tables, and ``manifest.json`` with
the fully resolved settings.  Failures print one line
``ERROR <ErrorClass>: <detail>`` to stderr and exit non-zero.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .complexity import gaussian_negative_entropy
from .exceptions import TransferLawError, ValidationError
from .fit import (
    FitOptions,
    fit_full,
    fit_loglog_linear,
    fit_simple,
    landscape,
    linearize,
    stabilize_D,
)
from .io import read_matrix, read_observations, write_csv, write_json, write_observations
from .law import SimpleLawParams, full_law_eval, simple_law_eval
from .theory.experiment import TargetSpec, TransferConfig, transfer_experiment
from .theory.kernels import KernelSpec, spectrum
from .theory.network import init_network
from .theory.rates import boundary_report, bound_terms, rate_predict

ENV_OUT = "TRANSFERLAW_OUT"
DEFAULT_OUT = "transferlaw-out"
PLOT_POINTS = 200


class ConfigError(ValidationError):
    """Bad configuration file, unknown key or malformed value."""


# ---------------------------------------------------------------------------
# option parsing helpers
# ---------------------------------------------------------------------------

def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _float_pair(text):
    vals = [float(v) for v in str(text).replace(" ", "").split(",") if v]
    if len(vals) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(vals)


def _float_or_none(text):
    if text is None or str(text).strip().lower() in ("none", "free", ""):
        return None
    return float(text)


def _float_or(word):
    def parse(text):
        if str(text).strip().lower() == word:
            return word
        return float(text)
    parse.__name__ = f"float_or_{word}"
    return parse


@dataclass(frozen=True)
class Opt:
    name: str
    parse: Callable
    default: Any
    help: str


def _common_fit():
    return [Opt("data", str, None, "observations CSV (n,s,error[,group])"),
            Opt("multistart", int, 8, "random restarts"),
            Opt("seed", int, 0, "restart seed")]


COMMANDS = {
    "fit": _common_fit() + [
        Opt("fixed_d", _float_or_none, 0.48, "fixed D, or 'none' to fit it"),
        Opt("s", _float_or_none, None, "use only rows with this fine-tuning size"),
    ],
    "fit-full": _common_fit() + [
        Opt("fit_eps", _bool, False, "also fit the irreducible error"),
    ],
    "stabilize-d": _common_fit() + [
        Opt("init", float, 0.5, "initial alpha and D"),
        Opt("tol", float, 1e-3, "stop when both updates are below this"),
        Opt("max_rounds", int, 100, "round limit"),
    ],
    "landscape": [
        Opt("data", str, None, "observations CSV"),
        Opt("alpha_range", _float_pair, (0.05, 1.5), "alpha range lo,hi"),
        Opt("d_range", _float_pair, (0.01, 5.0), "D range lo,hi"),
        Opt("n_alpha", int, 61, "alpha grid size"),
        Opt("n_d", int, 61, "D grid size"),
        Opt("log_d", _bool, False, "log-spaced D axis"),
    ],
    "linearize": _common_fit() + [
        Opt("fixed_d", _float_or_none, 0.48, "fixed D for the fit, or 'none'"),
        Opt("alpha", _float_or_none, None, "use these parameters instead of fitting"),
        Opt("d", _float_or_none, None, "D (with --alpha and --c)"),
        Opt("c", _float_or_none, None, "C (with --alpha and --d)"),
    ],
    "simulate": [
        Opt("t0", _int_list, [2**k for k in range(7, 13)], "pre-training sizes"),
        Opt("t1", _int_list, [2**k for k in range(6, 11)], "fine-tuning sizes"),
        Opt("seeds", _int_list, list(range(8)), "seeds"),
        Opt("mode", str, "rkhs", "rkhs or network"),
        Opt("m", int, 1024, "network width (network mode)"),
        Opt("eta0", float, 0.25, "pre-training step size"),
        Opt("eta1", _float_or_none, None, "fixed fine-tuning step size"),
        Opt("zeta", float, 1.0 / 3.0, "eta1 = eta1_const * T1^-zeta"),
        Opt("eta1_const", float, 0.25, "constant in the eta1 schedule"),
        Opt("lambda0", _float_or("optimal"), "optimal", "number or 'optimal'"),
        Opt("lambda1", _float_or("rate"), "rate", "number or 'rate'"),
        Opt("lambda1_const", float, 1.0, "constant in the lambda1 rule"),
        Opt("xi", float, 2.0, "designed-spectrum decay exponent"),
        Opt("l", int, 64, "designed-spectrum mode count"),
        Opt("r0", float, 1.0, "pre-training target smoothness"),
        Opt("r1", float, 0.5, "residual target smoothness"),
        Opt("profile0", str, "power:1", "pre-training target profile"),
        Opt("profile1", str, "power:1", "residual target profile"),
        Opt("phi1_scale", float, 0.5, "residual target scale"),
        Opt("target_seed", int, 0, "seed for target phases"),
        Opt("eval_q", int, 256, "quadrature points for the L2 error"),
    ],
    "spectrum": [
        Opt("kernel", str, "designed", "designed, ntk or random-feature"),
        Opt("xi", float, 2.0, "designed-spectrum decay exponent"),
        Opt("l", int, 32, "designed-spectrum mode count"),
        Opt("scale", float, 1.0, "designed-spectrum scale"),
        Opt("mc_samples", int, 100000, "Monte Carlo draws (ntk)"),
        Opt("m", int, 1024, "width (random-feature)"),
        Opt("seed", int, 0, "seed"),
        Opt("q", int, 256, "quadrature size (power of two)"),
    ],
    "rates": [
        Opt("r0", float, 0.5, "pre-training smoothness"),
        Opt("r1", float, 0.5, "residual smoothness"),
        Opt("xi", float, 2.0, "spectral decay exponent"),
        Opt("zeta", float, 1.0 / 3.0, "step-size exponent"),
        Opt("t1", _float_or_none, None, "T1 for the bound terms"),
        Opt("lambda1", _float_or_none, None, "lambda1 for the bound terms"),
        Opt("eta1", _float_or_none, None, "eta1 for the bound terms"),
        Opt("r0_error", _float_or_none, None, "pre-training error R0 for the bound terms"),
    ],
    "complexity": [
        Opt("data", str, None, "activation matrix CSV (header optional)"),
        Opt("epsilon", _float_or_none, None, "covariance ridge; default 1e-6*trace/d"),
    ],
}


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="transferlaw",
        description="Fit transfer scaling laws and run transfer-learning simulations.",
        epilog="Precedence: flags > [command] section of --config > defaults. "
               f"Output directory: --out, else ${ENV_OUT}, else ./{DEFAULT_OUT}.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI file with one section per command")
    parser.add_argument("--out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for cmd, opts in COMMANDS.items():
        p = sub.add_parser(cmd, help=f"run {cmd}")
        for o in opts:
            p.add_argument(_flag(o.name), dest=o.name, default=argparse.SUPPRESS,
                           help=f"{o.help} (default: {o.default})")
    return parser


def resolve_settings(command, flags: dict, config_path=None):
    """Merge defaults, config-file section and flags for one command."""
    opts = {o.name: o for o in COMMANDS[command]}
    settings = {name: o.default for name, o in opts.items()}
    if config_path:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(config_path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        unknown = [s for s in cp.sections() if s not in COMMANDS]
        if unknown:
            raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
        if cp.has_section(command):
            for key, value in cp.items(command):
                name = key.replace("-", "_")
                if name not in opts:
                    raise ConfigError(f"unknown key {key!r} in section [{command}]")
                settings[name] = _parse(opts[name], value, f"[{command}] {key}")
    for name, value in flags.items():
        if name in opts:
            settings[name] = _parse(opts[name], value, _flag(name))
    return settings


def _parse(opt, value, where):
    try:
        return opt.parse(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _need(settings, key):
    if settings.get(key) in (None, ""):
        raise ConfigError(f"missing required setting {_flag(key)}")
    return settings[key]


def _plot_rows(x_obs, y_obs, predict, lo, hi):
    dense = np.geomspace(lo, hi, PLOT_POINTS)
    rows = [(x, y, predict(x)) for x, y in zip(x_obs, y_obs)]
    rows += [(x, float("nan"), predict(x)) for x in dense]
    rows.sort(key=lambda r: r[0])
    return rows


def cmd_fit(st, out):
    obs = read_observations(_need(st, "data"))
    if st["s"] is not None:
        obs = [o for o in obs if o.s == st["s"]]
        if not obs:
            raise ValidationError(f"no rows with s = {st['s']}")
    rep = fit_simple(obs, FitOptions(fixed_D=st["fixed_d"], multistart=st["multistart"],
                                     seed=st["seed"]))
    ns = [o.n for o in obs]
    rows = _plot_rows(ns, [o.error for o in obs], lambda n: simple_law_eval(rep.params, n),
                      min(ns), max(ns))
    write_csv(out / "fit_plot.csv", ("x", "observed", "predicted"), rows)
    write_json(out / "fit.json", rep.to_dict())
    return ["fit.json", "fit_plot.csv"]


def cmd_fit_full(st, out):
    obs = read_observations(_need(st, "data"))
    rep = fit_full(obs, FitOptions(fixed_D=None, fix_eps_zero=not st["fit_eps"],
                                   multistart=st["multistart"], seed=st["seed"]))
    payload = rep.to_dict()
    payload["max_error"] = max(o.error for o in obs)
    written = ["fit_full.json"]
    ns = [o.n for o in obs]
    for s in sorted({o.s for o in obs}):
        sub = [o for o in obs if o.s == s]
        rows = _plot_rows([o.n for o in sub], [o.error for o in sub],
                          lambda n, s=s: full_law_eval(rep.params, n, s), min(ns), max(ns))
        name = f"fit_full_plot_s{s:g}.csv"
        write_csv(out / name, ("x", "observed", "predicted"), rows)
        written.append(name)
    write_json(out / "fit_full.json", payload)
    return written


def _groups(obs):
    groups = {}
    for o in obs:
        groups.setdefault(o.group, []).append(o)
    return [groups[k] for k in sorted(groups)], sorted(groups)


def cmd_stabilize_d(st, out):
    obs = read_observations(_need(st, "data"))
    groups, names = _groups(obs)
    res = stabilize_D(groups, init=st["init"], tol=st["tol"], max_rounds=st["max_rounds"],
                      options=FitOptions(fixed_D=None, multistart=st["multistart"],
                                         seed=st["seed"]))
    write_json(out / "stabilize_d.json", {"D_hat": res.D_hat, "alpha_hat": res.alpha_hat,
                                          "converged": res.converged, "groups": names,
                                          "history": res.history})
    return ["stabilize_d.json"]


def cmd_landscape(st, out):
    obs = read_observations(_need(st, "data"))
    grid = landscape(obs, st["alpha_range"], st["d_range"], st["n_alpha"], st["n_d"],
                     log_D=st["log_d"])
    rows = [(a, d, grid.C[i, j], grid.loss[i, j])
            for i, a in enumerate(grid.alpha_axis) for j, d in enumerate(grid.D_axis)]
    write_csv(out / "landscape.csv", ("alpha", "D", "C", "loss"), rows)
    payload = grid.to_dict()
    payload["ridge"] = grid.ridge().tolist()
    write_json(out / "landscape.json", payload)
    return ["landscape.json", "landscape.csv"]


def cmd_linearize(st, out):
    obs = read_observations(_need(st, "data"))
    given = [st["alpha"], st["d"], st["c"]]
    if all(v is not None for v in given):
        params = SimpleLawParams(*given)
    elif any(v is not None for v in given):
        raise ConfigError("give all of --alpha, --d and --c, or none of them")
    else:
        params = fit_simple(obs, FitOptions(fixed_D=st["fixed_d"], multistart=st["multistart"],
                                            seed=st["seed"])).params
    lin = linearize(obs, params)
    payload = {"params": params.as_dict(), "omitted": lin.omitted}
    if len(lin.n) >= 2 and np.ptp(lin.n) > 0:
        ll = fit_loglog_linear(lin.n, lin.excess)
        payload["loglog"] = {"slope": ll.slope, "intercept": ll.intercept, "r2": ll.r2}
    rows = _plot_rows(lin.n, lin.excess,
                      lambda n: params.D * math.exp(-params.alpha * math.log(n)),
                      min(lin.n), max(lin.n)) if len(lin.n) else []
    write_csv(out / "linearize_plot.csv", ("x", "observed", "predicted"), rows)
    write_json(out / "linearize.json", payload)
    return ["linearize.json", "linearize_plot.csv"]


def simulate_config(st):
    return TransferConfig(
        T0=st["t0"], T1=st["t1"], seeds=st["seeds"], mode=st["mode"], M=st["m"],
        eta0=st["eta0"], eta1=st["eta1"], zeta=st["zeta"], eta1_const=st["eta1_const"],
        lambda0=st["lambda0"], lambda1=st["lambda1"], lambda1_const=st["lambda1_const"],
        kernel=KernelSpec.designed(st["xi"], st["l"]), eval_Q=st["eval_q"],
        targets=TargetSpec(st["r0"], st["r1"], st["profile0"], st["profile1"],
                           st["phi1_scale"], st["target_seed"]),
    )


def cmd_simulate(st, out):
    cfg = simulate_config(st)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = transfer_experiment(cfg)
    write_observations(out / "observations.csv", res.observations())
    write_csv(out / "simulate_rows.csv", res.COLUMNS,
              ([r[c] for c in res.COLUMNS] for r in res.rows))
    messages = sorted({str(w.message) for w in caught})
    write_json(out / "simulate.json", {"config": cfg.to_dict(), "n_rows": len(res.rows),
                                       "warnings": messages})
    return ["simulate.json", "observations.csv", "simulate_rows.csv"]


def cmd_spectrum(st, out):
    kind = st["kernel"]
    if kind == "designed":
        kernel = KernelSpec.designed(st["xi"], st["l"], st["scale"])
    elif kind == "ntk":
        kernel = KernelSpec.ntk(st["mc_samples"], st["seed"])
    elif kind == "random-feature":
        kernel = KernelSpec.random_feature(init_network(st["m"], 2, st["seed"]))
    else:
        raise ConfigError(f"unknown kernel {kind!r}; use designed, ntk or random-feature")
    rep = spectrum(kernel, st["q"], seed=st["seed"])
    write_csv(out / "spectrum.csv", ("index", "eigenvalue"),
              enumerate(rep.eigenvalues.tolist(), start=1))
    payload = rep.to_dict()
    payload["kernel"] = kernel.to_dict()
    write_json(out / "spectrum.json", payload)
    return ["spectrum.json", "spectrum.csv"]


def cmd_rates(st, out):
    pred = rate_predict(st["r0"], st["r1"], st["xi"], st["zeta"])
    payload = {"prediction": pred.to_dict(),
               "T0_exponent": pred.T0_exponent(st["r0"], st["xi"]),
               "boundary": boundary_report(st["r0"], st["r1"], st["xi"])}
    bound_args = [st["t1"], st["lambda1"], st["eta1"], st["r0_error"]]
    if all(v is not None for v in bound_args):
        bt = bound_terms(st["t1"], st["lambda1"], st["eta1"], st["xi"], st["r0"], st["r1"],
                         st["r0_error"])
        payload["bound_terms"] = {"values": bt.values, "dominant": bt.dominant}
    write_csv(out / "rates.csv",
              ("case", "condition_ok", "lambda1_rule", "T1_exponent", "R0_exponent"),
              [(pred.case, pred.condition_ok, pred.lambda1_rule, pred.T1_exponent,
                pred.R0_exponent)])
    write_json(out / "rates.json", payload)
    return ["rates.json", "rates.csv"]


def cmd_complexity(st, out):
    rep = gaussian_negative_entropy(read_matrix(_need(st, "data")), st["epsilon"])
    write_json(out / "complexity.json", rep.to_dict())
    return ["complexity.json"]


HANDLERS = {
    "fit": cmd_fit, "fit-full": cmd_fit_full, "stabilize-d": cmd_stabilize_d,
    "landscape": cmd_landscape, "linearize": cmd_linearize, "simulate": cmd_simulate,
    "spectrum": cmd_spectrum, "rates": cmd_rates, "complexity": cmd_complexity,
}


def run_command(command, settings, out_dir):
    """Run one command with resolved settings; returns the written file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = HANDLERS[command](settings, out)
    manifest = {
        "command": command,
        "settings": {k: (list(v) if isinstance(v, tuple) else v) for k, v in settings.items()},
        "outputs": written,
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    write_json(out / "manifest.json", manifest)
    return written + ["manifest.json"]


def _one_line(text):
    return " ".join(str(text).split())


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    try:
        settings = resolve_settings(args.command, flags, args.config)
        out_dir = args.out or os.environ.get(ENV_OUT) or DEFAULT_OUT
        written = run_command(args.command, settings, out_dir)
    except TransferLawError as exc:
        print(f"ERROR {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (OSError, ArithmeticError, ValueError) as exc:
        print(f"ERROR {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1
    for name in written:
        print(Path(out_dir) / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
