import json

import pytest

from mechdesign import cli
from mechdesign.experiments import Comparison


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, [json.loads(line) for line in out.splitlines() if line.strip()], err, out


def test_solve_sga(capsys):
    code, recs, err, _ = run(capsys, "solve", "--domain", "sga", "--theta", "0.5,0")
    assert code == 0
    eq = recs[0]["equilibrium"]
    assert eq["m"] == pytest.approx(2 / 3, abs=1e-3) and eq["b"] == pytest.approx(0, abs=1e-3)
    assert "0.6667*t" in err


def test_solve_vicious(capsys):
    code, recs, _, _ = run(capsys, "solve", "--domain", "vicious", "--theta", "1,0,1,0,0,0,0", "--l", "0.2857")
    assert code == 0
    eq = recs[0]["equilibrium"]
    assert eq["m"] == pytest.approx(0.7778, abs=1e-3) and eq["b"] == pytest.approx(0.2222, abs=1e-3)


def test_solve_degenerate(capsys):
    code, recs, err, _ = run(capsys, "solve", "--domain", "sga", "--theta", "0,0")
    assert code != 0 and "degenerate design" in err and recs == []


def test_evaluate_examples(capsys):
    code, recs, _, _ = run(capsys, "evaluate", "--domain", "sga", "--objective", "fairness_gap", "--theta", "0.3333333333,0")
    assert code == 0 and recs[0]["objective"]["value"] == pytest.approx(2 / 9, abs=0.01)
    assert recs[0]["kind"] == "report" and recs[0]["constraints"][0]["pass"]

    code, recs, _, _ = run(capsys, "evaluate", "--domain", "myerson", "--objective", "revenue", "--theta", "1,0.5,0,0,0,0,0", "--constraints", "convergence,ex_interim_ir")
    assert code == 0 and recs[0]["objective"]["value"] == pytest.approx(1 / 3, abs=0.01)

    # q = 1/2 makes every best response flat, so welfare is read at an imposed increasing strategy
    code, recs, _, _ = run(capsys, "evaluate", "--domain", "myerson", "--objective", "welfare", "--theta", "0.5,0.5,0,0,0,0,0", "--constraints", "", "--strategy", "1,0")
    assert code == 0 and recs[0]["objective"]["value"] == pytest.approx(0.5, abs=0.01)


def test_evaluate_solver_failure_serializes_nulls(capsys):
    code, recs, _, out = run(capsys, "evaluate", "--domain", "sga", "--objective", "fairness_gap", "--theta", "0,0")
    assert code != 0
    assert recs[0]["objective"]["value"] is None and recs[0]["equilibrium"] is None
    assert "NaN" not in out


def test_summary_schema_and_roundtrip(capsys):
    code, recs, _, out = run(capsys, "optimize", "--domain", "sga", "--objective", "fairness_gap", "--start", "0.5,0", "--steps", "300", "--seed", "0")
    assert code == 0
    summary = recs[-1]
    assert summary["kind"] == "summary"
    for key in ("kind", "domain", "theta", "objective", "constraints", "equilibrium", "seed"):
        assert key in summary
    assert set(summary["objective"]) == {"kind", "value", "stderr"}
    assert {"m", "b", "iterations", "converged"} <= set(summary["equilibrium"])
    assert summary["objective"]["value"] <= 0.12
    assert all(r["kind"] == "trace" and "seed" in r and "chain_seed" in r for r in recs[:-1])
    for line in out.splitlines():
        assert cli.dumps(cli.loads(line)) == line


def test_optimize_examples(capsys):
    code, recs, _, _ = run(capsys, "optimize", "--domain", "sga", "--objective", "exante_gap", "--restarts", "5", "--steps", "300")
    assert code == 0 and recs[-1]["objective"]["value"] <= 0.185
    code, recs, _, _ = run(capsys, "optimize", "--domain", "sga", "--objective", "winner_utility", "--start", "0.5,0", "--steps", "300")
    assert code == 0 and recs[-1]["objective"]["value"] >= 0.43


def test_optimize_is_byte_deterministic(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.jsonl"
        argv = ["optimize", "--domain", "sga", "--objective", "winner_utility", "--steps", "20", "--restarts", "2", "--seed", "5", "--out", str(path)]
        assert cli.main(argv) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0


def test_env_seed_fallback(capsys, monkeypatch):
    monkeypatch.setenv("MECH_SEED", "17")
    _, recs, _, _ = run(capsys, "solve", "--domain", "sga", "--theta", "0.5,0")
    assert recs[0]["seed"] == 17
    _, recs, _, _ = run(capsys, "solve", "--domain", "sga", "--theta", "0.5,0", "--seed", "3")
    assert recs[0]["seed"] == 3


def test_all_infeasible_exit(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "domain = myerson\n"
        "objective.kind = revenue\n"
        "constraints = min_revenue\n"
        "constraint.min_revenue.floor = 10  # unreachable\n"
        "constraint.min_revenue.mode = reject\n"
        "anneal.steps = 3\n"
        "anneal.restarts = 1\n"
    )
    code, recs, err, _ = run(capsys, "optimize", "--config", str(cfg), "--samples", "0.05")
    assert code == cli.EXIT_INFEASIBLE
    assert recs[-1]["kind"] == "summary" and recs[-1]["feasible"] is False
    assert "best attempt" in err


def test_config_parsing():
    kv = cli.parse_config_text("# comment\ndomain = vicious\nl = 0.1\nanneal.steps=7\nanneal.proposal_stddev = 0.1, 0.2\nobjective.weights = revenue:1, welfare:0.5\nobjective.kind = weighted\nstart = 0.1,0.2,0.3,0.4,0.5,0.6,0.7\n")
    cfg = cli.ExperimentConfig.from_mapping(kv)
    assert cfg.domain == "vicious" and cfg.l == 0.1
    assert cfg.anneal.steps == 7 and cfg.anneal.proposal_stddev == (0.1, 0.2)
    assert cfg.objective.weights == (("revenue", 1.0), ("welfare", 0.5))
    assert cfg.start == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
    with pytest.raises(ValueError):
        cli.ExperimentConfig.from_mapping({"anneal.nope": "1"})
    with pytest.raises(ValueError):
        cli.ExperimentConfig.from_mapping({"domain": "nope"})
    with pytest.raises(ValueError):
        cli.parse_config_text("no equals sign")


def test_csv_output(capsys):
    code = cli.main(["evaluate", "--domain", "sga", "--objective", "winner_utility", "--theta", "0.5,0", "--format", "csv"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0 and out[0].startswith("kind,") and out[1].startswith("report,")


def test_reproduce_exit_codes(capsys, monkeypatch):
    ok = Comparison("x", "metric", 1.0, 1.0, ">= 0", True)
    bad = Comparison("x", "metric", -1.0, 1.0, ">= 0", False)
    monkeypatch.setitem(cli.EXPERIMENTS, "table1", lambda seed, scale: [ok])
    code, recs, err, _ = run(capsys, "reproduce", "table1")
    assert code == 0 and recs[0]["kind"] == "comparison" and recs[0]["pass"]
    monkeypatch.setitem(cli.EXPERIMENTS, "table1", lambda seed, scale: [ok, bad])
    code, recs, err, _ = run(capsys, "reproduce", "table1")
    assert code != 0 and "FAIL" in err and len(recs) == 2
