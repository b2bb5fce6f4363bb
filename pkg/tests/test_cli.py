import json
import subprocess
import sys

import numpy as np
import pytest

from piflow import GainConfig, run
from piflow.cli import main
from piflow.experiments import (ExperimentConfig, aggregate, cmd_qp_bench, cmd_scalar_modes,
                                default_rho)
from piflow.traceio import read_trace, samples_equal, write_trace

from conftest import conforming_qp


def _bench(tmp_path, fmt="csv", *extra):
    out = tmp_path / fmt
    code = main(["qp-bench", "--seeds", "1", "--n", "4", "--m", "3", "--t-final", "5",
                 "--out", str(out), "--format", fmt, *extra])
    return code, out


def test_qp_bench_structure(tmp_path, capsys):
    code, out = _bench(tmp_path)
    assert code == 0
    assert sorted(p.name for p in out.glob("trace_*")) == ["trace_seed1_pdgd.csv",
                                                          "trace_seed1_pi.csv"]
    summary = json.loads((out / "summary.json").read_text())
    assert [(r["seed"], r["flow"]) for r in summary["records"]] == [(1, "pdgd"), (1, "pi")]
    lines = (out / "summary.csv").read_text().splitlines()
    assert lines[0].startswith("# N = accepted")
    assert len(lines) == 4
    assert "accepted integrator steps" in capsys.readouterr().out


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_trace_roundtrip(tmp_path, fmt):
    p = conforming_qp(2)
    res = run(p, GainConfig(rho=0.3, k_p=0.2, t_final=5.0), "pi", record_states=True)
    res.trace.set_reference(np.zeros(p.n))
    for s in res.trace.samples:
        s.x = s.lam = None
    path = write_trace(res.trace, tmp_path / f"t.{fmt}", fmt)
    back = read_trace(path)
    assert samples_equal(back, res.trace)
    assert (back.accepted_steps, back.rejected_steps) == (res.trace.accepted_steps,
                                                         res.trace.rejected_steps)
    assert back.wall_time == res.trace.wall_time


def test_trace_csv_header_and_precision(tmp_path):
    code, out = _bench(tmp_path)
    text = (out / "trace_seed1_pi.csv").read_text().splitlines()
    assert text[0] == "t,step,constraint_violation,kkt_total,dist_to_opt"
    assert text[-1].startswith("# accepted_steps=")
    back = read_trace(out / "trace_seed1_pi.csv")
    assert back.t[-1] == 5.0


def test_aggregates_recompute(tmp_path):
    cfg = ExperimentConfig(experiment="qp_bench", seeds=[0, 1, 2], n=4, m=3,
                           gains=GainConfig(k_p=-0.7, t_final=5.0))
    summary = cmd_qp_bench(cfg)
    for flow, agg in summary.aggregates.items():
        N = np.array([r.accepted_steps for r in summary.records if r.flow == flow], float)
        T = np.array([r.wall_time for r in summary.records if r.flow == flow], float)
        assert abs(agg["N_mean"] - N.mean()) <= 1e-12 * max(1, N.mean())
        assert abs(agg["N_std"] - N.std(ddof=1)) <= 1e-12 * max(1, N.std())
        assert agg["N_worst"] == N.max()
        assert abs(agg["T_mean"] - T.mean()) <= 1e-12
    assert aggregate(summary.records) == summary.aggregates


def test_summary_json_aggregates_match_rows(tmp_path):
    code, out = _bench(tmp_path, "json")
    data = json.loads((out / "summary.json").read_text())
    for flow, agg in data["aggregates"].items():
        N = [r["accepted_steps"] for r in data["records"] if r["flow"] == flow]
        assert agg["N_mean"] == pytest.approx(np.mean(N), abs=1e-12)


def test_deterministic(tmp_path):
    _, a = _bench(tmp_path / "a")
    _, b = _bench(tmp_path / "b")
    for name in ("trace_seed1_pdgd.csv", "trace_seed1_pi.csv"):
        assert samples_equal(read_trace(a / name), read_trace(b / name), check_wall_time=False)
    ra = json.loads((a / "summary.json").read_text())["records"]
    rb = json.loads((b / "summary.json").read_text())["records"]
    for x, y in zip(ra, rb):
        x.pop("wall_time"), y.pop("wall_time")
        assert x == y


def test_workers_give_same_records(tmp_path):
    cfg = dict(experiment="qp_bench", seeds=[0, 1], n=4, m=3,
               gains=GainConfig(k_p=-0.7, t_final=5.0))
    a = cmd_qp_bench(ExperimentConfig(**cfg))
    b = cmd_qp_bench(ExperimentConfig(workers=2, **cfg))
    strip = [(r.seed, r.flow, r.accepted_steps, r.final_kkt) for r in a.records]
    assert strip == [(r.seed, r.flow, r.accepted_steps, r.final_kkt) for r in b.records]


def test_invalid_config_exit_code(tmp_path, capsys):
    assert main(["qp-bench", "--seeds", "0", "--rho", "-1"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"experiment": "sysid"}))
    assert main(["solve", "--config", str(wrong)]) == 2


def test_numeric_failure_exit_code(tmp_path, capsys):
    prob = tmp_path / "nan.json"
    prob.write_text('{"H": [[1, 0], [0, 1]], "b": [NaN, 0], "C": [[1, 0]], "d": [0]}')
    assert main(["solve", "--problem", str(prob)]) == 1
    assert "numeric failure" in capsys.readouterr().err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "single_solve", "seeds": [3], "n": 3, "m": 2,
                               "gains": {"k_p": 0.3, "t_final": 5.0}}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    data = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert {r["seed"] for r in data["records"]} == {3}


def test_scalar_modes_command(capsys):
    assert main(["scalar-modes"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["A1"] == [[-1.5, -1.0], [2.5, -1.0]]
    assert report["A2"] == [[-1.0, 0.0], [-1.0, -8.0]]
    assert report["verdict"] == "PI faster" and report["beats_pdgd_best"]
    assert cmd_scalar_modes(1.0, 0.5, 4.0, 0.0)["verdict"] == "equal"


def test_rate_command_reports_violation(capsys):
    assert main(["rate", "--seed", "0", "--n", "5", "--m", "3", "--kp", "-0.7"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert not report["hypotheses_ok"]
    assert "K_p not positive" in report["violations"]


def test_rate_command_with_trace(tmp_path, capsys):
    p = conforming_qp(1)
    prob = tmp_path / "p.json"
    H, b = p.quadratic_form
    prob.write_text(json.dumps({"H": H.tolist(), "b": b.tolist(),
                                "C": p.C.tolist(), "d": p.d.tolist()}))
    assert main(["solve", "--problem", str(prob), "--kp", "0.4", "--t-final", "15",
                 "--rel-tol", "1e-10", "--abs-tol", "1e-12", "--out", str(tmp_path / "o")]) == 0
    capsys.readouterr()
    assert main(["rate", "--problem", str(prob), "--kp", "0.4",
                 "--trace", str(tmp_path / "o" / "trace_pi.csv")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["hypotheses_ok"] and report["mu"] > 0
    assert report["empirical_slope"] <= -report["mu_half"]


def test_rank_deficient_rate_is_reported(tmp_path, capsys):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"H": [[1, 0], [0, 1]], "b": [0, 0],
                                "C": [[1, 1], [2, 2]], "d": [0, 0]}))
    assert main(["rate", "--problem", str(prob), "--kp", "0.1"]) == 0
    assert "CC' singular" in json.loads(capsys.readouterr().out)["violations"]


def test_default_rho_rule():
    C = np.diag([1.0, 3.0])
    assert default_rho(C, 0.5) == pytest.approx(0.1)
    assert default_rho(0.1 * C, 0.5) == 1.0
    assert default_rho(C, -0.7) == 1.0


def test_sysid_small(tmp_path, capsys):
    code = main(["sysid", "--seed", "0", "--n-ident", "40", "--n-val", "20", "--t-final", "20",
                 "--out", str(tmp_path)])
    assert code == 0
    data = json.loads((tmp_path / "summary.json").read_text())
    assert set(data["fit"]) == {"pdgd", "pi"}
    assert (tmp_path / "sysid_dataset.csv").exists()
    assert "FIT" in capsys.readouterr().out


def test_sysid_constant_output_is_numeric_failure(monkeypatch, capsys):
    import piflow.experiments as ex
    from piflow.problems import make_sysid_dataset

    def silent(n_ident, n_val, noise_var, seed):
        ds = make_sysid_dataset(n_ident, n_val, 0.0, seed)
        ds.y_clean[:] = 0.0
        ds.y_noisy[:] = 0.0
        return ds

    monkeypatch.setattr(ex, "make_sysid_dataset", silent)
    assert main(["sysid", "--n-ident", "10", "--n-val", "5", "--t-final", "1"]) == 1
    assert "constant" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "piflow", "scalar-modes", "--kp", "0"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["verdict"] == "equal"
