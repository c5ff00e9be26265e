import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mvdrclt.cli import main

from conftest import GOLDEN

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SYMMETRIC = CONFIGS / "symmetric_m16.json"
ULA_M20 = CONFIGS / "ula_m20_n40_supervised.json"

PREDICT_FIELDS = {
    "delta", "delta_tilde", "gamma", "gamma_tilde", "one_minus_gg", "abar", "bbar", "snr_bar_s",
    "snr_bar_u", "V", "S", "T_script", "sigma_s2", "sigma_u2", "sigma_matrix", "coeffs", "mse_bar",
    "sigma_mse2", "snr_opt", "bound_report",
}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, base=SYMMETRIC, **changes):
    d = json.loads(Path(base).read_text())
    d.update(changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    return path


def test_predict_symmetric(capsys):
    code, out, err = run(capsys, "predict", "--config", SYMMETRIC)
    assert code == 0
    doc = json.loads(out)
    assert PREDICT_FIELDS <= set(doc)
    assert doc["delta"] == pytest.approx(GOLDEN, abs=1e-12)
    assert doc["bound_report"]["passed"] is True


def test_predict_is_pure(capsys):
    first = run(capsys, "predict", "--config", ULA_M20)[1]
    second = run(capsys, "predict", "--config", ULA_M20)[1]
    assert first == second


def test_predict_ula_bounds(capsys):
    for path in sorted(CONFIGS.glob("ula_*.json")):
        code, out, _ = run(capsys, "predict", "--config", path)
        assert code == 0
        assert json.loads(out)["bound_report"]["passed"] is True


def test_predict_alpha_zero_exit_2(capsys, caplog, tmp_path):
    code, out, _ = run(capsys, "predict", "--config", write_config(tmp_path, alpha=0))
    assert code == 2
    assert out == ""
    assert "alpha" in caplog.text


def test_predict_unknown_key_exit_2(capsys, tmp_path):
    assert run(capsys, "predict", "--config", write_config(tmp_path, loading=0.1))[0] == 2


def test_predict_non_hpd_explicit_exit_2(capsys, tmp_path):
    spatial = {"type": "explicit", "R0_real": [[1.0, 0.0], [0.0, -1.0]], "s_real": [1.0, 0.0]}
    assert run(capsys, "predict", "--config", write_config(tmp_path, M=2, spatial=spatial))[0] == 2


def test_predict_undefined_unsupervised_limit_is_null(capsys, tmp_path):
    spatial = {"type": "explicit", "R0_real": [[0.01, 0.0], [0.0, 0.01]], "s_real": [1.0, 0.0]}
    code, out, _ = run(capsys, "predict", "--config", write_config(tmp_path, M=2, N=4, alpha=0.001, spatial=spatial))
    assert code == 0
    doc = json.loads(out)
    assert doc["snr_bar_u"] is None and doc["sigma_u2"] is None


def test_simulate_single_rep_deterministic(capsys, tmp_path):
    cfg = write_config(tmp_path, reps=1, seed=5)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", "--config", cfg, "--out", a)[0] == 0
    assert run(capsys, "simulate", "--config", cfg, "--out", b, "--workers", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "rep,a,b,snr" and len(rows) == 2


def test_simulate_mse_column(capsys, tmp_path):
    out = tmp_path / "s.csv"
    run(capsys, "simulate", "--config", write_config(tmp_path, reps=3, mode="mse"), "--out", out)
    assert out.read_text().splitlines()[0] == "rep,a,b,snr,mse"


def test_simulate_ula_row_count(capsys, tmp_path):
    out = tmp_path / "ula.csv"
    assert run(capsys, "simulate", "--config", ULA_M20, "--out", out)[0] == 0
    assert len(out.read_text().splitlines()) == 10_001


def test_validate_pass(capsys, tmp_path):
    cfg = write_config(tmp_path, M=64, N=64, mode="mse", reps=10_000, seed=1)
    code, out, _ = run(capsys, "validate", "--config", cfg)
    report = json.loads(out)
    assert code == 0, report
    assert report["verdict"] == "pass"
    assert report["ks_normal"] <= 0.03


def test_validate_wrong_sigma_fails(capsys, tmp_path):
    cfg = write_config(tmp_path, M=64, N=64, mode="mse", reps=10_000, seed=1)
    code, out, _ = run(capsys, "validate", "--config", cfg, "--sigma-scale", "10")
    report = json.loads(out)
    assert code == 1
    assert report["verdict"] == "fail" and not report["variance_passed"]


def test_beta_oracle_m5_n30(capsys):
    code, out, _ = run(capsys, "beta-oracle", "--m", 5, "--n", 30, "--reps", 20_000, "--seed", 1)
    doc = json.loads(out)
    assert code == 0
    assert (doc["beta_p"], doc["beta_q"]) == (27, 4)
    assert doc["ks_beta"] <= 0.02 and doc["verdict"] == "pass"


def test_beta_oracle_m2_n10(capsys):
    code, out, _ = run(capsys, "beta-oracle", "--m", 2, "--n", 10, "--reps", 20_000, "--seed", 2)
    doc = json.loads(out)
    assert code == 0 and (doc["beta_p"], doc["beta_q"]) == (10, 1)


def test_beta_oracle_rejects_square(capsys):
    assert run(capsys, "beta-oracle", "--m", 5, "--n", 5, "--reps", 10, "--seed", 0)[0] == 2


def test_hist(capsys, tmp_path):
    cfg = write_config(tmp_path, reps=3000, seed=2)
    samples, out = tmp_path / "s.csv", tmp_path / "h.csv"
    run(capsys, "simulate", "--config", cfg, "--out", samples)
    assert run(capsys, "hist", "--samples", samples, "--config", cfg, "--bins", 25, "--out", out)[0] == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["bin_left", "bin_right", "count", "density", "reference_pdf"]
    assert len(rows) == 25
    width = np.array([float(r["bin_right"]) - float(r["bin_left"]) for r in rows])
    density = np.array([float(r["density"]) for r in rows])
    ref = np.array([float(r["reference_pdf"]) for r in rows])
    assert np.sum(width * density) == pytest.approx(1.0, abs=1e-12)
    assert np.all(ref >= 0) and np.sum(width * ref) > 0.5


def test_hist_empty_samples_exit_2(capsys, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code = run(capsys, "hist", "--samples", empty, "--config", SYMMETRIC, "--bins", 10, "--out", tmp_path / "h.csv")[0]
    assert code == 2


def test_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["predict"])
    assert info.value.code == 2


def test_module_entry_point_logs_to_stderr():
    proc = subprocess.run(
        [sys.executable, "-m", "mvdrclt", "-v", "predict", "--config", str(SYMMETRIC)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    json.loads(proc.stdout)
    bad = subprocess.run(
        [sys.executable, "-m", "mvdrclt", "beta-oracle", "--m", "3", "--n", "3"],
        capture_output=True, text=True, check=False,
    )
    assert bad.returncode == 2 and bad.stdout == "" and "N >= M + 1" in bad.stderr
