import json

import numpy as np
import pytest

from xepr.cli import main


def _run(argv):
    return main([str(a) for a in argv])


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_simulate_defaults(tmp_path, capsys):
    assert _run(["simulate", "--out", tmp_path, "--frames", 4, "--bins", 10]) == 0
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert lines[0] == "frame,k,basis_A,value_A,basis_B,value_B"
    assert len(lines) == 41
    assert "throughput" in capsys.readouterr().out
    man = _manifest(tmp_path)
    assert {o["path"] for o in man["outputs"]} == {"samples.csv", "samples.csv.meta.json"}


def test_simulate_deterministic(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "squeezing_db_A": -3.0, "frames": 6, "bins_per_frame": 20,
                               "phase_drift_rate": 0.01, "seed": 99}))
    for d in ("a", "b"):
        assert _run(["simulate", "--config", cfg, "--out", tmp_path / d, "--threads", 2]) == 0
    ha = [o["sha256"] for o in _manifest(tmp_path / "a")["outputs"]]
    hb = [o["sha256"] for o in _manifest(tmp_path / "b")["outputs"]]
    assert ha == hb


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("XEPR_FRAMES", "3")
    monkeypatch.setenv("XEPR_BINS", "5")
    monkeypatch.setenv("XEPR_OUT", str(tmp_path / "env"))
    assert _run(["simulate"]) == 0
    assert len((tmp_path / "env" / "samples.csv").read_text().splitlines()) == 16
    # explicit flag beats the environment
    assert _run(["simulate", "--frames", 2]) == 0
    assert len((tmp_path / "env" / "samples.csv").read_text().splitlines()) == 11
    monkeypatch.setenv("XEPR_SEED", "abc")
    assert _run(["simulate"]) == 2


@pytest.mark.parametrize(
    "cfg",
    [{"frames": 2, "typo_field": 1}, {"eta2_A": 1.5}, {"frames": 0}, {"basis_schedule": "y"}, {"schema_version": 2}],
)
def test_schema_violations(tmp_path, cfg):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert _run(["simulate", "--config", path, "--out", tmp_path]) == 2


def test_invalid_json_and_missing_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    assert _run(["simulate", "--config", path, "--out", tmp_path]) == 2
    assert _run(["simulate", "--config", tmp_path / "nope.json", "--out", tmp_path]) == 3
    assert _run(["bogus-command"]) == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert _run(["simulate", "--out", blocker / "sub", "--frames", 1, "--bins", 2]) == 3


def test_analyze_vacuum(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"squeezing_db_A": 0.0, "squeezing_db_B": 0.0, "frames": 300, "bins_per_frame": 20}))
    assert _run(["simulate", "--config", cfg, "--out", tmp_path]) == 0
    assert _run(["analyze", tmp_path / "samples.csv", "--out", tmp_path / "r"]) == 0
    out = capsys.readouterr().out
    assert "K=0" in out
    rep = json.loads((tmp_path / "r" / "report.json").read_text())
    assert abs(np.mean(rep["db_x"])) < 0.2
    assert rep["certificate"]["first_failure"][0] == 1
    assert (tmp_path / "r" / "nullifiers.csv").read_text().startswith("k,varX_db,varP_db,ciX,ciP")


def test_analyze_with_vacuum_reference(tmp_path):
    assert _run(["simulate", "--out", tmp_path / "s", "--frames", 40, "--bins", 10]) == 0
    cfg = tmp_path / "v.json"
    cfg.write_text(json.dumps({"squeezing_db_A": 0.0, "squeezing_db_B": 0.0, "frames": 40, "bins_per_frame": 10}))
    assert _run(["simulate", "--config", cfg, "--out", tmp_path / "v"]) == 0
    assert _run(["analyze", tmp_path / "s" / "samples.csv", "--vacuum", tmp_path / "v" / "samples.csv",
                 "--out", tmp_path / "r", "--mean-subtract"]) == 0


def test_analyze_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("frame,k,basis_A,value_A,basis_B,value_B\n0,1,x,0.1,x,0.2\n0,2,x,oops,x,0.2\n")
    assert _run(["analyze", bad, "--out", tmp_path]) == 2
    assert "line 3" in capsys.readouterr().err


def test_analyze_needs_two_frames_per_basis(tmp_path):
    assert _run(["simulate", "--out", tmp_path, "--frames", 2, "--bins", 5]) == 0
    assert _run(["analyze", tmp_path / "samples.csv", "--out", tmp_path]) == 2


def test_predict(tmp_path, capsys):
    assert _run(["predict", "--out", tmp_path]) == 0
    pred = json.loads((tmp_path / "predictions.json").read_text())["prediction"]
    assert pred["db_x"] == pytest.approx(-3.8724, abs=1e-3)
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"eta2_A": 1, "eta2_B": 1, "eta2_AF": 1, "eta2_BF": 1,
                               "sweep_mode_bandwidth_hz": [2.5e6, 5e6, 1e7]}))
    assert _run(["predict", "--config", cfg, "--out", tmp_path / "q"]) == 0
    data = json.loads((tmp_path / "q" / "predictions.json").read_text())
    assert data["prediction"]["db_x"] == pytest.approx(10 * np.log10(data["prediction"]["sq"]))
    assert np.all(np.diff([r["db_x"] for r in data["sweep"]]) > 0)
    cfg.write_text(json.dumps({"opo_hwhm": 1}))
    assert _run(["predict", "--config", cfg, "--out", tmp_path]) == 2


def test_graph_command(tmp_path, capsys):
    assert _run(["graph", "--nbins", 8, "--r", 0.6, "--out", tmp_path]) == 0
    rep = json.loads((tmp_path / "graph.json").read_text())
    c = rep["checks"]
    assert c["bipartite"] and c["extracted_vs_ZE_ring"] < 1e-9 and c["odd_shift_vs_ZC"] < 1e-9
    assert _run(["graph", "--nbins", 8, "--r", 0.0, "--out", tmp_path]) == 0
    rep = json.loads((tmp_path / "graph.json").read_text())
    diag = [e["weight"] for e in rep["graph_E"]["edges"] if e["source"] == e["target"]]
    assert all(w == [0.0, 1.0] for w in diag) and len(diag) == 16
    assert _run(["graph", "--nbins", 2, "--out", tmp_path]) == 2


def test_mbqc_command(tmp_path):
    prog = tmp_path / "prog.json"
    prog.write_text(json.dumps([{"theta1": np.pi / 2, "theta2": 0.0}]))
    assert _run(["mbqc", prog, "--out", tmp_path, "--seed", 1]) == 0
    rep = json.loads((tmp_path / "mbqc.json").read_text())
    assert np.allclose(rep["output"]["cov"], rep["input"]["cov"], atol=1e-6)
    prog.write_text(json.dumps({"r": 10, "program": [{"theta1": np.pi / 4, "theta2": -np.pi / 4}],
                                "input": {"mean": [0, 0], "cov": [[0.1, 0], [0, 0.625]]}}))
    assert _run(["mbqc", prog, "--out", tmp_path]) == 0
    rep = json.loads((tmp_path / "mbqc.json").read_text())
    assert rep["output"]["cov"][0][0] == pytest.approx(0.625, abs=1e-6)
    prog.write_text(json.dumps([{"theta1": 1.0, "theta2": 1.0}]))
    assert _run(["mbqc", prog, "--out", tmp_path]) == 2
    prog.write_text(json.dumps([{"theta1": 1.0}]))
    assert _run(["mbqc", prog, "--out", tmp_path]) == 2


@pytest.mark.parametrize("fig", ["fig2", "tableS3"])
def test_reproduce_quick(tmp_path, fig):
    assert _run(["reproduce", fig, "--out", tmp_path]) == 0
    man = _manifest(tmp_path)
    assert man["outputs"] and all(len(o["sha256"]) == 64 for o in man["outputs"])


def test_reproduce_fig2_shape(tmp_path):
    assert _run(["reproduce", "fig2", "--out", tmp_path, "--seed", 4]) == 0
    lines = (tmp_path / "fig2_correlations.csv").read_text().splitlines()
    assert len(lines) == 51
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    # overlapping columns: their difference is the squeezed nullifier
    assert np.var(rows[:, 1] - rows[:, 2]) < 0.5 * np.var(rows[:, 1] + rows[:, 2])
    assert np.var(rows[:, 3] - rows[:, 4]) < 0.5 * np.var(rows[:, 3] + rows[:, 4])


def test_reproduce_fig3_and_figS8_small(tmp_path):
    assert _run(["reproduce", "fig3", "--out", tmp_path / "a", "--frames", 20, "--bins", 30]) == 0
    header = (tmp_path / "a" / "fig3.csv").read_text().splitlines()[0]
    assert header == "k,varX_db,varP_db,vacX_db,vacP_db,bound_db"
    assert _run(["reproduce", "figS8", "--out", tmp_path / "b", "--frames", 20, "--bins", 200,
                 "--target-k", 100]) == 0
    cal = json.loads((tmp_path / "b" / "figS8_calibration.json").read_text())
    assert cal["phase_drift_rate"] > 0
