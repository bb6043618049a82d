import json
import math

import numpy as np
import pytest

from plateaulab import SweepSpec, fit_descent_time, load_sweep_csv, run_sweep
from plateaulab.cli import main as cli_main


# --- descent-time fits --------------------------------------------------------

def _planted_rows(ms=(1000, 3000, 10000, 30000), seeds=(0, 1, 2), slope=0.5,
                  intercept=1.7):
    rows = []
    for m in ms:
        for seed in seeds:
            rows.append({
                "m": m, "alpha": 1.0, "target": "f1", "seed": seed, "n": 100,
                "T_p_emp": 1.0, "T_d_emp": slope * math.log(m) + intercept,
                "T_sp_emp": None, "T_p_pred": 1.0, "T_d_pred": 2.0,
                "T_sp_pred": 3.0, "loss_initial": 0.5, "loss_final": 0.01,
                "stop_reason": "milestones", "status": "ok",
            })
    return rows


def test_fit_recovers_planted_slope():
    fits = fit_descent_time(_planted_rows(), "log_m")
    means = [f for f in fits if not f.pooled]
    assert len(means) == 1
    assert means[0].slope == pytest.approx(0.5, abs=1e-9)
    assert means[0].intercept == pytest.approx(1.7, abs=1e-9)
    assert means[0].r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_exact_line_r2_one():
    rows = []
    for i, alpha in enumerate((0.75, 1.0, 1.25, 1.5)):
        rows.append({"m": 100, "alpha": alpha, "target": "f1", "seed": 0, "n": 10,
                     "T_p_emp": None, "T_d_emp": 0.5 * alpha, "T_sp_emp": None,
                     "T_p_pred": 0.0, "T_d_pred": 0.0, "T_sp_pred": 0.0,
                     "loss_initial": 1.0, "loss_final": 0.1,
                     "stop_reason": "milestones", "status": "ok"})
    fits = [f for f in fit_descent_time(rows, "alpha") if not f.pooled]
    assert fits[0].slope == pytest.approx(0.5, abs=1e-12)
    assert fits[0].r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_rejects_rank_deficient():
    rows = _planted_rows(ms=(1000, 3000))
    with pytest.raises(ValueError, match="3 distinct"):
        fit_descent_time(rows, "log_m")


def test_fit_rejects_unknown_covariate():
    with pytest.raises(ValueError, match="covariate"):
        fit_descent_time(_planted_rows(), "width")


# --- sweeps ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    spec = SweepSpec(ms=(60, 120), alphas=(0.75,), targets=("f2",), seeds=(0, 1),
                     out_dir=str(out), n=41, lo=-3.0, hi=3.0, stop_at="T_d",
                     workers=1)
    return spec, run_sweep(spec)


def test_sweep_completes_all_cells(tiny_sweep):
    spec, result = tiny_sweep
    assert len(result.rows) == 4
    assert not result.failures
    assert all(r["T_d_emp"] is not None for r in result.rows)
    assert all(r["T_p_emp"] < r["T_d_emp"] for r in result.rows)


def test_sweep_csv_roundtrip(tiny_sweep):
    spec, result = tiny_sweep
    rows = load_sweep_csv(result.sweep_csv)
    assert len(rows) == len(result.rows)
    for loaded, orig in zip(rows, result.rows):
        assert loaded["m"] == orig["m"]
        assert loaded["T_d_emp"] == pytest.approx(orig["T_d_emp"], rel=1e-11)


def test_sweep_rows_sorted_regardless_of_seed_order(tiny_sweep, tmp_path):
    spec, result = tiny_sweep
    shuffled = SweepSpec(ms=(120, 60), alphas=(0.75,), targets=("f2",), seeds=(1, 0),
                         out_dir=str(tmp_path), n=41, lo=-3.0, hi=3.0,
                         stop_at="T_d", workers=1)
    result2 = run_sweep(shuffled)
    assert result2.sweep_csv.read_bytes() == result.sweep_csv.read_bytes()
    assert result2.cells_csv.read_bytes() == result.cells_csv.read_bytes()


def test_sweep_parallel_matches_serial(tiny_sweep, tmp_path):
    spec, result = tiny_sweep
    par = SweepSpec(ms=(60, 120), alphas=(0.75,), targets=("f2",), seeds=(0, 1),
                    out_dir=str(tmp_path), n=41, lo=-3.0, hi=3.0, stop_at="T_d",
                    workers=2)
    result2 = run_sweep(par)
    assert result2.sweep_csv.read_bytes() == result.sweep_csv.read_bytes()
    for row in result.rows:
        key = f"m{row['m']}_a{row['alpha']:g}_{row['target']}_s{row['seed']}"
        a = (result.sweep_csv.parent / "cells" / f"{key}.trajectory.csv").read_bytes()
        b = (result2.sweep_csv.parent / "cells" / f"{key}.trajectory.csv").read_bytes()
        assert a == b


def test_sweep_validates_grids():
    with pytest.raises(ValueError, match="nonempty"):
        SweepSpec(ms=(), alphas=(1.0,))
    with pytest.raises(Exception, match="alpha"):
        SweepSpec(ms=(10,), alphas=(0.3,))


# --- CLI ------------------------------------------------------------------------

TRAIN_ARGS = ["--m", "30", "--alpha", "0.8", "--n", "31", "--lo", "-3", "--hi", "3",
              "--max-time", "0.05", "--record-stride", "5"]


@pytest.mark.parametrize("target", ["f1", "f2", "f3"])
def test_cli_train_smoke(tmp_path, capsys, target):
    code = cli_main(["train", *TRAIN_ARGS, "--target", target,
                     "--out", str(tmp_path), "--tag", f"smoke_{target}"])
    assert code == 0
    csv_path = tmp_path / f"smoke_{target}.trajectory.csv"
    assert csv_path.exists()
    assert (tmp_path / f"smoke_{target}.milestones.json").exists()
    assert (tmp_path / f"smoke_{target}.summary.json").exists()
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == ("t,loss,K,Kprime,q_max,norm_a,norm_W,dir_sum_1,"
                        "w2_rel,condensation_ratio,grad_inf_norm,theta_inf_norm")


def test_cli_train_rerun_identical(tmp_path):
    for tag in ("one", "two"):
        assert cli_main(["train", *TRAIN_ARGS, "--target", "f2",
                         "--out", str(tmp_path), "--tag", tag]) == 0
    assert ((tmp_path / "one.trajectory.csv").read_bytes()
            == (tmp_path / "two.trajectory.csv").read_bytes())
    assert ((tmp_path / "one.milestones.json").read_bytes()
            == (tmp_path / "two.milestones.json").read_bytes())


def test_cli_train_rejects_bad_alpha(tmp_path, capsys):
    code = cli_main(["train", "--m", "10", "--alpha", "0.4", "--out", str(tmp_path)])
    assert code == 1
    assert "alpha" in capsys.readouterr().err


def test_cli_usage_error_is_exit_1(capsys):
    assert cli_main(["train", "--integrator", "verlet"]) == 1
    assert cli_main(["no-such-command"]) == 1


def test_cli_config_file_with_flag_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"m": 30, "alpha": 0.8, "n": 31, "lo": -3.0,
                                    "hi": 3.0, "max_time": 0.05, "target": "f2",
                                    "record_stride": 5}))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli_main(["train", "--config", str(cfg_file), "--out", str(out1),
                     "--tag", "t"]) == 0
    # flags win over the config file
    assert cli_main(["train", *TRAIN_ARGS, "--target", "f2", "--config", str(cfg_file),
                     "--out", str(out2), "--tag", "t"]) == 0
    assert ((out1 / "t.trajectory.csv").read_bytes()
            == (out2 / "t.trajectory.csv").read_bytes())


def test_cli_sweep_single_cell_matches_train(tmp_path):
    sweep_out = tmp_path / "sweep"
    code = cli_main(["sweep", "--m", "60", "--alpha", "0.75", "--targets", "f2",
                     "--seeds", "0", "--n", "41", "--lo", "-3", "--hi", "3",
                     "--stop-at", "T_d", "--workers", "1", "--out", str(sweep_out)])
    assert code == 0
    # the trajectory CSV holds records only, so any max_time past the
    # milestone crossing reproduces the sweep cell byte-for-byte
    train_out = tmp_path / "train"
    code = cli_main(["train", "--m", "60", "--alpha", "0.75", "--target", "f2",
                     "--seed", "0", "--n", "41", "--lo", "-3", "--hi", "3",
                     "--normalize", "--stop", "T_d", "--max-time", "8.0",
                     "--out", str(train_out), "--tag", "cell"])
    assert code == 0
    cell = sweep_out / "cells" / "m60_a0.75_f2_s0.trajectory.csv"
    assert cell.read_bytes() == (train_out / "cell.trajectory.csv").read_bytes()
    rows = load_sweep_csv(sweep_out / "sweep.csv")
    assert len(rows) == 1 and rows[0]["status"] == "ok"


def test_cli_fit_from_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert cli_main(["sweep", "--m", "40,80,160", "--alpha", "0.75", "--targets",
                     "f2", "--seeds", "0", "--n", "41", "--lo", "-3", "--hi", "3",
                     "--stop-at", "T_d", "--workers", "1", "--out", str(out)]) == 0
    assert cli_main(["fit", "--sweep-csv", str(out / "sweep.csv"),
                     "--covariate", "log_m", "--out", str(out)]) == 0
    doc = json.loads((out / "fit.json").read_text())
    fits = [f for f in doc["fits"] if not f["pooled"]]
    assert len(fits) == 1
    assert fits[0]["n_points"] == 3


def test_cli_predict(capsys):
    assert cli_main(["predict", "--alpha", "1.0", "--m", "5000", "--beta", "0.05"]) == 0
    doc = json.loads(capsys.readouterr().out)
    lnm = math.log(5000)
    assert doc["T_p_pred"] == pytest.approx(lnm / 4, rel=1e-10)
    assert doc["T_d_pred"] == pytest.approx(lnm / 2, rel=1e-10)
    assert doc["alpha1"] == 0.75


def test_cli_check_data(capsys):
    assert cli_main(["check-data", "--target", "f1", "--n", "1000", "--tol", "0.1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert not doc["symmetric_sampling_ok"]
    assert 73.0 < doc["second_moment_dev"] < 76.0
    assert cli_main(["check-data", "--target", "f1", "--n", "1000", "--normalize",
                     "--tol", "1e-8"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["symmetric_sampling_ok"] and doc["leading_term_ok"]


def test_cli_version(capsys):
    assert cli_main(["version"]) == 0
    out = capsys.readouterr().out
    assert "plateaulab" in out and "schema=1" in out


def test_cli_outdir_env_override(tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("PLATEAULAB_OUTDIR", str(env_dir))
    assert cli_main(["train", *TRAIN_ARGS, "--target", "f2",
                     "--out", str(tmp_path / "ignored"), "--tag", "envtest"]) == 0
    assert (env_dir / "envtest.trajectory.csv").exists()
    assert not (tmp_path / "ignored").exists()
