import json
from dataclasses import replace

import pytest

from hartree5d.cli import main
from hartree5d.verify import Suite, check_hls


def write_cfg(tmp_path, body, name="run.cfg"):
    p = tmp_path / name
    p.write_text(f"ground_state.cache_dir = {tmp_path / 'cache'}\n" + body)
    return p


def run(tmp_path, cmd, body):
    cfg = write_cfg(tmp_path, body)
    out = tmp_path / cmd
    return main([cmd, "--config", str(cfg), "--out", str(out)]), out


def test_groundstate_report_and_cache(tmp_path, capsys):
    code, out = run(tmp_path, "groundstate", "")
    assert code == 0
    rep = json.loads((out / "groundstate.json").read_text())
    assert max(rep["pohozaev_residuals"]) < 1e-3 and rep["cache_hit"] is False
    assert {"mass", "kinetic", "lv4", "energy", "c_hls", "iterations"} <= rep.keys()
    code, out = run(tmp_path, "groundstate", "")
    again = json.loads((out / "groundstate.json").read_text())
    assert again["cache_hit"] is True and again["mass"] == rep["mass"]


@pytest.mark.parametrize("a, regime", [(0.9, "GlobalBounded"), (1.1, "DivergentRegime"), (1.0, "OutOfTheory")])
def test_classify(tmp_path, a, regime):
    code, out = run(tmp_path, "classify", f"initial_data.a = {a}\n")
    rep = json.loads((out / "classify.json").read_text())
    assert code == 0 and rep["regime"] == regime
    if a == 0.9:
        assert rep["lambda_minus"] == pytest.approx(0.81, abs=1e-4)
    if a == 1.1:
        assert rep["lambda"] == pytest.approx(1.21, abs=1e-4)


def test_validation_exit_code(tmp_path):
    code, out = run(tmp_path, "groundstate", "grid.n_points = 4\n")
    assert code == 1 and not out.exists()


def test_nonconvergence_exit_code(tmp_path):
    code, _ = run(tmp_path, "groundstate", "ground_state.max_iters = 2\n")
    assert code == 2


def test_io_exit_codes(tmp_path):
    assert main(["classify", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 3
    (tmp_path / "bad_ckpt.txt").write_text("garbage\n")
    code, _ = run(tmp_path, "evolve", f"resume_from = {tmp_path / 'bad_ckpt.txt'}\n")
    assert code == 3


def test_evolve_blowup_outputs(tmp_path):
    body = "initial_data.a = 1.1\nevolution.t_max = 2\nevolution.record_stride = 20\noutputs.checkpoint_every = 200\n"
    code, out = run(tmp_path, "evolve", body)
    assert code == 0
    rep = json.loads((out / "outcome.json").read_text())
    assert rep["verdict"] == "BlowupDetected" and rep["max_eta"] >= 10 and "note" in rep
    assert rep["t_final"] < 0.9  # below the finite-variance estimate
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,mass,energy,grad_norm_sq,eta,variance,variance_rate,z_R,tail_mass_outer,dt"
    assert len(list((out / "checkpoints").iterdir())) >= 1


def test_evolve_is_deterministic(tmp_path):
    body = "initial_data.a = 0.9\nevolution.t_max = 0.05\n"
    _, out1 = run(tmp_path, "evolve", body)
    first = (out1 / "trajectory.csv").read_bytes()
    _, out2 = run(tmp_path, "evolve", body)
    assert (out2 / "trajectory.csv").read_bytes() == first


def test_evolve_out_of_theory_is_labelled(tmp_path):
    body = "initial_data.preset = phase_gaussian\ninitial_data.chirp = 1\nevolution.t_max = 0.01\n"
    code, out = run(tmp_path, "evolve", body)
    rep = json.loads((out / "outcome.json").read_text())
    assert code == 0 and rep["regime"] == "OutOfTheory" and "label" in rep


def test_tb_command(tmp_path):
    code, out = run(tmp_path, "tb", "initial_data.a = 1.1\nvirial.R = 5\n")
    rep = json.loads((out / "tb.json").read_text())
    assert code == 0
    assert rep["finite_variance"]["variance_rate"] == 0
    assert rep["finite_variance"]["t_b"] == pytest.approx(0.8996, rel=1e-3)
    assert rep["localized"]["t_b"] > 0
    assert rep["radial"]["failure"]["which"] == "R lower bound"


def test_tb_tiny_R_reports_failures(tmp_path):
    code, out = run(tmp_path, "tb", "initial_data.a = 1.1\nvirial.R = 0.1\n")
    rep = json.loads((out / "tb.json").read_text())
    assert rep["localized"]["failure"]["which"] == "R lower bound"
    assert rep["radial"]["failure"]["which"] == "R lower bound"


def test_tb_lambda_one_is_rejected(tmp_path):
    code, _ = run(tmp_path, "tb", "initial_data.a = 1.1\nvirial.lambda = 1\n")
    assert code == 1


def test_tb_without_divergent_data_is_rejected(tmp_path):
    code, _ = run(tmp_path, "tb", "initial_data.a = 0.9\n")
    assert code == 1


def test_verify_fault_injection():
    assert check_hls(Suite()).passed
    assert not check_hls(Suite(c_hls_scale=1.1)).passed


def test_verify_runs_and_passes(tmp_path, capsys):
    # empty cache directory: the suite solves the ground states itself
    code, out = run(tmp_path, "verify", "")
    rep = json.loads((out / "verify.json").read_text())
    assert [c["number"] for c in rep["checks"]] == list(range(1, 11))
    assert code == 0 and rep["passed"]
    assert capsys.readouterr().out.count("[PASS]") == 10
