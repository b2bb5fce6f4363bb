"""Command-line entry point: ``piflow {qp-bench,sysid,scalar-modes,rate,solve}``.

Exit codes: 0 success, 1 numeric failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

import numpy as np

from .core import ContractError, GainConfig, IntegrationError, InfeasibleProblemError
from .experiments import (ExperimentConfig, cmd_qp_bench, cmd_rate_analysis,
                          cmd_scalar_modes, cmd_single_solve, cmd_sysid)
from .traceio import read_trace

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

COMMANDS = {
    "qp-bench": "qp_bench",
    "sysid": "sysid",
    "scalar-modes": "scalar_modes",
    "rate": "rate_analysis",
    "solve": "single_solve",
}

# per-experiment defaults that differ from GainConfig's
EXPERIMENT_GAINS = {
    "qp_bench": dict(eta=1.0, k_i=1.0, k_p=-0.7, t_final=30.0, integrator="rk45"),
    "sysid": dict(eta=1.0, k_i=1.0, k_p=-0.5, t_final=1000.0, integrator="rk23"),
    "scalar_modes": dict(rho=0.5, k_i=4.0, k_p=1.0),
    "rate_analysis": dict(k_i=1.0, k_p=0.1),
    "single_solve": dict(k_i=1.0, k_p=0.5),
}

GAIN_FLAGS = {"rho": "rho", "eta": "eta", "ki": "k_i", "kp": "k_p", "t_final": "t_final",
              "integrator": "integrator", "rel_tol": "rel_tol", "abs_tol": "abs_tol",
              "kkt_stop": "kkt_stop_tol"}


class ConfigError(ValueError):
    pass


def _add_common(p):
    p.add_argument("--config", help="JSON file mirroring the experiment configuration")
    p.add_argument("--seed", "--seeds", dest="seeds", type=int, nargs="+", help="random seed(s)")
    p.add_argument("--n", type=int, help="number of variables")
    p.add_argument("--m", type=int, help="number of constraints")
    p.add_argument("--rho", type=float, help="penalty parameter (default: see README)")
    p.add_argument("--ki", type=float, help="integral gain K_i")
    p.add_argument("--kp", type=float, help="proportional gain K_p")
    p.add_argument("--eta", type=float, help="PDGD dual gain")
    p.add_argument("--t-final", dest="t_final", type=float, help="integration horizon")
    p.add_argument("--integrator", choices=("rk45", "rk23"))
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--kkt-stop", dest="kkt_stop", type=float,
                   help="stop once the KKT residual falls below this value")
    p.add_argument("--ridge", type=float, help="ridge weight for the sysid LP")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"))
    p.add_argument("--workers", type=int, help="process pool size for qp-bench")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="piflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        if name == "sysid":
            p.add_argument("--n-ident", dest="n_ident", type=int)
            p.add_argument("--n-val", dest="n_val", type=int)
            p.add_argument("--noise-var", dest="noise_var", type=float)
        if name == "scalar-modes":
            p.add_argument("--w", type=float, help="curvature of the scalar objective")
        if name in ("rate", "solve"):
            p.add_argument("--problem", dest="problem_file",
                           help="JSON file with H, b, C, d (default: random QP)")
        if name == "rate":
            p.add_argument("--trace", dest="trace_file",
                           help="trace file with dist_to_opt for the empirical decay slope")
    return parser


def config_from_args(args):
    experiment = COMMANDS[args.command]
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if raw.get("experiment", experiment) != experiment:
            raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    gain_kw = dict(EXPERIMENT_GAINS[experiment])
    gain_kw.update(raw.pop("gains", {}) or {})
    for flag, key in GAIN_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            gain_kw[key] = val
    rho_given = "rho" in gain_kw
    if not rho_given:
        gain_kw["rho"] = 1.0
    gain_kw = {k: v for k, v in gain_kw.items() if k in GainConfig.__dataclass_fields__}
    known = {f.name for f in fields(ExperimentConfig)}
    cfg = {k: v for k, v in raw.items() if k in known and k not in ("gains", "experiment")}
    for key in known:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if experiment == "qp_bench" and "seeds" not in cfg:
        cfg["seeds"] = list(range(20))
    try:
        gains = GainConfig(**gain_kw)
        return ExperimentConfig(experiment=experiment, gains=gains, rho_given=rho_given, **cfg)
    except (ContractError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _print(obj):
    print(json.dumps(obj, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _print_summary(summary):
    print(f"# {summary.to_dict()['convention']}")
    print(f"{'seed':>6} {'flow':>5} {'N':>8} {'rejected':>8} {'T [s]':>9} "
          f"{'kkt':>10} {'violation':>10} {'dist':>10}")
    for r in summary.records:
        dist = "n/a" if r.final_dist is None else f"{r.final_dist:.3e}"
        print(f"{r.seed:>6} {r.flow:>5} {r.accepted_steps:>8} {r.rejected_steps:>8} "
              f"{r.wall_time:>9.3f} {r.final_kkt:>10.3e} {r.final_violation:>10.3e} {dist:>10}")
    for flow, agg in summary.aggregates.items():
        print(f"{flow:>5}: N mean {agg['N_mean']:.1f} std {agg['N_std']:.1f} worst {agg['N_worst']:.0f}"
              f" | T mean {agg['T_mean']:.3g} std {agg['T_std']:.3g} worst {agg['T_worst']:.3g}")


def dispatch(config):
    exp = config.experiment
    if exp == "qp_bench":
        summary = cmd_qp_bench(config)
        _print_summary(summary)
    elif exp == "sysid":
        summary = cmd_sysid(config)
        _print_summary(summary)
        extra = summary.extra
        print(f"FIT pdgd {extra['fit']['pdgd']:.2f}  pi {extra['fit']['pi']:.2f}")
        reach = extra["pi_steps_to_pdgd_final_kkt"]
        if reach is None:
            reach = f"not reached (lowest PI KKT {extra['min_kkt']['pi']:.3e})"
        print(f"PI steps to reach PDGD final KKT ({extra['pdgd_final_kkt']:.3e}): {reach}")
    elif exp == "scalar_modes":
        g = config.gains
        _print(cmd_scalar_modes(config.w, g.rho, g.k_i, g.k_p))
    elif exp == "rate_analysis":
        trace = read_trace(config.trace_file) if config.trace_file else None
        _print(cmd_rate_analysis(config, trace=trace))
    else:
        summary, _ = cmd_single_solve(config)
        _print_summary(summary)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        dispatch(config)
    except ContractError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, InfeasibleProblemError, np.linalg.LinAlgError,
            FloatingPointError, ZeroDivisionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
