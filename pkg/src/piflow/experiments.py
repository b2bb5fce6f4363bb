"""Experiment drivers behind the command-line interface.

Each ``cmd_*`` function takes an :class:`ExperimentConfig`, performs the
runs, optionally writes traces and summaries to ``config.out_dir`` and
returns the in-memory result.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (compare_scalar_modes, decay_slope, rate_bound,
                       scalar_mode_matrices, spectral_bounds)
from .core import ContractError, GainConfig, InfeasibleProblemError, Problem
from .integrator import run
from .oracle import active_set_qp, kkt_polish
from .problems import build_linf_lp, fit_index, make_sysid_dataset, random_qp
from .traceio import write_trace

log = logging.getLogger(__name__)

EXPERIMENTS = ("qp_bench", "sysid", "scalar_modes", "rate_analysis", "single_solve")
ENUM_LIMIT = 12
N_CONVENTION = "N = accepted integrator steps; rejected steps are counted separately"


def default_rho(C, k_p):
    """Penalty weight used when none is given.

    With k_p > 0 the rate guarantee applies and needs rho < 1/c_hi, so
    rho = min(1, 0.9/c_hi). With k_p <= 0 the guarantee is void anyway and
    rho = 1; a rho below |k_p| destabilizes the PI flow on problems with
    large CC' (the proportional term then dominates the penalty curvature).
    """
    if k_p > 0:
        c_hi = float(np.linalg.eigvalsh(C @ C.T)[-1])
        return min(1.0, 0.9 / c_hi)
    return 1.0


@dataclass
class ExperimentConfig:
    experiment: str = "single_solve"
    seeds: list = field(default_factory=lambda: [0])
    gains: GainConfig = field(default_factory=GainConfig)
    rho_given: bool = False
    n: int = 50
    m: int = 45
    out_dir: Optional[str] = None
    fmt: str = "csv"
    workers: int = 1
    # system identification
    n_ident: int = 500
    n_val: int = 200
    noise_var: float = 0.1
    ridge: float = 0.0
    # scalar example
    w: float = 1.0
    problem_file: Optional[str] = None
    trace_file: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ContractError(f"experiment must be one of {EXPERIMENTS}")
        if self.experiment in ("qp_bench", "sysid") and not self.seeds:
            raise ContractError("at least one seed is required")
        if self.fmt not in ("csv", "json"):
            raise ContractError("format must be csv or json")
        if self.n < 1 or self.m < 1:
            raise ContractError("n and m must be positive")
        if self.workers < 1:
            raise ContractError("workers must be positive")

    def gains_for(self, problem):
        if self.rho_given:
            return self.gains
        return self.gains.replace(rho=default_rho(problem.C, self.gains.k_p))

    def out_path(self):
        if self.out_dir is None:
            return None
        p = Path(self.out_dir)
        p.mkdir(parents=True, exist_ok=True)
        return p


# --------------------------------------------------------------------------
# summaries
# --------------------------------------------------------------------------

@dataclass
class RunRecord:
    seed: int
    flow: str
    accepted_steps: int
    rejected_steps: int
    wall_time: float
    final_kkt: float
    final_violation: float
    final_dist: Optional[float]
    stop_reason: str


def aggregate(records):
    """mean / std / worst case of N and T per flow (sample std, ddof=1)."""
    out = {}
    for flow in sorted({r.flow for r in records}):
        rows = [r for r in records if r.flow == flow]
        N = np.array([r.accepted_steps for r in rows], dtype=float)
        T = np.array([r.wall_time for r in rows], dtype=float)
        ddof = 1 if len(rows) > 1 else 0
        out[flow] = {
            "runs": len(rows),
            "N_mean": float(N.mean()), "N_std": float(N.std(ddof=ddof)), "N_worst": float(N.max()),
            "T_mean": float(T.mean()), "T_std": float(T.std(ddof=ddof)), "T_worst": float(T.max()),
        }
    return out


@dataclass
class BenchSummary:
    records: list
    aggregates: dict
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_records(cls, records, **extra):
        records = sorted(records, key=lambda r: (r.seed, r.flow))
        return cls(records, aggregate(records), extra)

    def to_dict(self):
        return {"convention": N_CONVENTION,
                "records": [asdict(r) for r in self.records],
                "aggregates": self.aggregates, **self.extra}

    def write(self, out_dir, fmt):
        out_dir = Path(out_dir)
        (out_dir / "summary.json").write_text(json.dumps(self.to_dict(), indent=2))
        if fmt == "csv":
            cols = list(RunRecord.__dataclass_fields__)
            with (out_dir / "summary.csv").open("w") as fh:
                fh.write(f"# {N_CONVENTION}\n")
                fh.write(",".join(cols) + "\n")
                for r in self.records:
                    vals = [getattr(r, c) for c in cols]
                    fh.write(",".join("" if v is None else
                                      format(v, ".17g") if isinstance(v, float) else str(v)
                                      for v in vals) + "\n")


def _record(seed, flow, result):
    tr = result.trace
    last = tr.samples[-1]
    return RunRecord(seed, flow, tr.accepted_steps, tr.rejected_steps, tr.wall_time,
                     last.kkt_total, last.constraint_violation, last.dist_to_opt,
                     result.stop_reason)


def reference_solution(problem, candidates):
    """Ground truth for a QP: enumeration when small, else polished endpoint."""
    if problem.m <= ENUM_LIMIT:
        return active_set_qp(problem)
    for x, lam in candidates:
        try:
            return kkt_polish(problem, x, lam)
        except (InfeasibleProblemError, np.linalg.LinAlgError):
            continue
    raise InfeasibleProblemError("could not polish any flow endpoint to a KKT point")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _qp_seed(config, seed):
    problem = random_qp(config.n, config.m, seed)
    if np.linalg.matrix_rank(problem.C) < min(problem.m, problem.n):
        log.warning("seed %s: C is rank deficient, run skipped", seed)
        return seed, None
    gains = config.gains_for(problem)
    results = {flow: run(problem, gains, flow, record_states=True)
               for flow in ("pdgd", "pi")}
    try:
        ref = reference_solution(problem, [(results[f].final_state.x, results[f].final_state.lam)
                                           for f in ("pi", "pdgd")])
        for res in results.values():
            res.trace.set_reference(ref.x_star)
    except InfeasibleProblemError as exc:
        log.warning("seed %s: no reference optimum (%s)", seed, exc)
    for res in results.values():
        for s in res.trace.samples:
            s.x = s.lam = None
    return seed, (gains.rho, results)


def cmd_qp_bench(config):
    """Random-QP benchmark of PDGD against PI, one problem per seed."""
    out = config.out_path()
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(_qp_seed, [config] * len(config.seeds), config.seeds))
    else:
        outcomes = [_qp_seed(config, s) for s in config.seeds]
    records, rhos = [], {}
    for seed, payload in sorted(outcomes, key=lambda o: o[0]):
        if payload is None:
            continue
        rho, results = payload
        rhos[seed] = rho
        for flow, res in results.items():
            records.append(_record(seed, flow, res))
            if out is not None:
                write_trace(res.trace, out / f"trace_seed{seed}_{flow}.{config.fmt}", config.fmt)
    summary = BenchSummary.from_records(
        records, experiment="qp_bench", n=config.n, m=config.m,
        rho={str(k): v for k, v in rhos.items()}, t_final=config.gains.t_final)
    if out is not None:
        summary.write(out, config.fmt)
    return summary


def steps_to_reach(trace, level):
    """First accepted-step index whose KKT residual is <= level."""
    return trace.first_step_below(level)


def cmd_sysid(config):
    """l-infinity identification of the third-order plant with both flows."""
    seed = config.seeds[0]
    ds = make_sysid_dataset(config.n_ident, config.n_val, config.noise_var, seed)
    Z, y = ds.ident
    if np.ptp(y) == 0 or np.ptp(ds.validation[1]) == 0:
        raise InfeasibleProblemError("dataset output is constant; identification is degenerate")
    problem = build_linf_lp(Z, y, ridge=config.ridge)
    gains = config.gains_for(problem)
    Zv, yv = ds.validation
    out = config.out_path()
    records, fits, thetas, results = [], {}, {}, {}
    for flow in ("pdgd", "pi"):
        res = run(problem, gains, flow)
        results[flow] = res
        theta = res.final_state.x[:-1]
        thetas[flow] = theta
        fits[flow] = fit_index(yv, Zv @ theta)
        records.append(_record(seed, flow, res))
        if out is not None:
            write_trace(res.trace, out / f"trace_sysid_{flow}.{config.fmt}", config.fmt)
    pd_final = results["pdgd"].trace.samples[-1].kkt_total
    pi_reach = steps_to_reach(results["pi"].trace, pd_final)
    summary = BenchSummary.from_records(
        records, experiment="sysid", fit=fits, rho=gains.rho, t_final=gains.t_final,
        integrator=gains.integrator, n_ident=config.n_ident, n_val=config.n_val,
        noise_var=config.noise_var, delta={f: float(r.final_state.x[-1]) for f, r in results.items()},
        pdgd_final_kkt=pd_final, pi_steps_to_pdgd_final_kkt=pi_reach,
        min_kkt={f: float(r.trace.kkt_total.min()) for f, r in results.items()},
        theta={f: t.tolist() for f, t in thetas.items()})
    if out is not None:
        summary.write(out, config.fmt)
        ds.to_csv(out / "sysid_dataset.csv")
    return summary


def cmd_scalar_modes(w, rho, k_i, k_p):
    """Mode matrices and eigenvalues of both flows on min w*x**2/2 s.t. x <= 0."""
    A1, A2 = scalar_mode_matrices(w, rho, k_i, k_p)
    At1, At2 = scalar_mode_matrices(w, rho, k_i, 0.0)
    cmp = compare_scalar_modes(w, rho, k_i, k_p)
    return {
        "params": {"w": w, "rho": rho, "k_i": k_i, "k_p": k_p, "eta": k_i},
        "A1": A1.tolist(), "A2": A2.tolist(),
        "A1_pdgd": At1.tolist(), "A2_pdgd": At2.tolist(),
        "pi": _modes_dict(cmp["pi"]), "pdgd": _modes_dict(cmp["pdgd"]),
        "pdgd_best_abscissa": -(w + rho) / 2.0,
        "verdict": cmp["verdict"],
        "beats_pdgd_best": cmp["beats_pdgd_best"],
    }


def _modes_dict(modes):
    return {
        "mode1": [[ev.real, ev.imag] for ev in modes.mode1],
        "mode2": list(modes.mode2),
        "abscissa1": modes.abscissa1,
        "abscissa2": modes.abscissa2,
        "mode1_complex": modes.mode1_complex,
    }


def load_problem(path):
    """Quadratic problem from JSON with keys H, b, C, d."""
    data = json.loads(Path(path).read_text())
    try:
        return Problem.quadratic(data["H"], data["b"], data["C"], data["d"])
    except KeyError as exc:
        raise ContractError(f"problem file lacks key {exc}") from None


def _problem_for(config):
    if config.problem_file:
        return load_problem(config.problem_file)
    return random_qp(config.n, config.m, config.seeds[0])


def cmd_rate_analysis(config, trace=None, z_star=None):
    """Spectral bounds, rate guarantee and, given a trace, the observed decay."""
    problem = _problem_for(config)
    gains = config.gains_for(problem)
    bounds = spectral_bounds(problem, gains.rho, strict=False)
    report = rate_bound(gains, bounds)
    out = {"rho": gains.rho, "bounds": asdict(bounds), "mu": report.mu,
           "hypotheses_ok": report.hypotheses_ok, "violations": report.violations,
           "mu_half": report.mu / 2.0}
    if trace is not None:
        if z_star is not None:
            X, L = trace.states()
            dist = np.linalg.norm(np.hstack([X, L]) - z_star, axis=1)
        else:
            dist = trace.dist_to_opt
        out["empirical_slope"] = decay_slope(trace.t, dist)
    return out


def cmd_single_solve(config, flows=("pdgd", "pi")):
    """Solve one problem with the requested flows and compare with the oracle."""
    problem = _problem_for(config)
    gains = config.gains_for(problem)
    results = {f: run(problem, gains, f, record_states=True) for f in flows}
    ref = None
    try:
        ref = reference_solution(problem, [(r.final_state.x, r.final_state.lam)
                                           for r in results.values()])
        for r in results.values():
            r.trace.set_reference(ref.x_star)
    except InfeasibleProblemError as exc:
        log.warning("no reference optimum: %s", exc)
    out = config.out_path()
    records = []
    for f, r in results.items():
        for s in r.trace.samples:
            s.x = s.lam = None
        records.append(_record(config.seeds[0], f, r))
        if out is not None:
            write_trace(r.trace, out / f"trace_{f}.{config.fmt}", config.fmt)
    summary = BenchSummary.from_records(
        records, experiment="single_solve", rho=gains.rho,
        x_star=None if ref is None else ref.x_star.tolist())
    if out is not None:
        summary.write(out, config.fmt)
    return summary, results
