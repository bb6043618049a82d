import numpy as np
import pytest

from plateaulab_figures import SchemaError, read_sweep, read_trajectory
from plateaulab_figures.descent_fit import main as descent_main
from plateaulab_figures.target_comparison import main as targets_main
from plateaulab_figures.three_panel import main as stages_main


def test_read_trajectory_rejects_bad_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,loss\n0.0,1.0\n")
    with pytest.raises(SchemaError, match="schema"):
        read_trajectory(bad)


def test_read_trajectory_rejects_empty(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("# schema=1\nt,loss,K,Kprime,q_max,norm_a,norm_W,dir_sum_1,"
                     "w2_rel,condensation_ratio,grad_inf_norm,theta_inf_norm\n")
    with pytest.raises(SchemaError, match="no records"):
        read_trajectory(empty)


def test_read_trajectory_roundtrip(synthetic_artifacts):
    cols = read_trajectory(synthetic_artifacts["trajectory"])
    assert cols["t"].shape == cols["loss"].shape
    assert np.all(np.diff(cols["t"]) > 0)


def test_read_sweep_types(synthetic_artifacts):
    rows = read_sweep(synthetic_artifacts["sweep_m"])
    assert len(rows) == 12
    assert isinstance(rows[0]["m"], int)
    assert rows[0]["T_sp_emp"] is None
    assert rows[0]["status"] == "ok"


@pytest.mark.parametrize("fmt", ["png", "svg"])
def test_three_panel_deterministic(synthetic_artifacts, fmt):
    out1 = synthetic_artifacts["dir"] / f"a.{fmt}"
    out2 = synthetic_artifacts["dir"] / f"b.{fmt}"
    for out in (out1, out2):
        code = stages_main(["--trajectory", str(synthetic_artifacts["trajectory"]),
                            "--milestones", str(synthetic_artifacts["milestones"]),
                            "--out", str(out), "--format", fmt])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.stat().st_size > 1000


def test_three_panel_without_milestones_warns(synthetic_artifacts, capsys):
    out = synthetic_artifacts["dir"] / "nostars.png"
    code = stages_main(["--trajectory", str(synthetic_artifacts["trajectory"]),
                        "--milestones", str(synthetic_artifacts["no_milestones"]),
                        "--out", str(out)])
    assert code == 0
    assert "without stars" in capsys.readouterr().err
    assert out.exists()


def test_three_panel_empty_trajectory_fails(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("# schema=1\nt,loss,K,Kprime,q_max,norm_a,norm_W,dir_sum_1,"
                     "w2_rel,condensation_ratio,grad_inf_norm,theta_inf_norm\n")
    code = stages_main(["--trajectory", str(empty),
                        "--out", str(tmp_path / "x.png")])
    assert code == 1
    assert "no records" in capsys.readouterr().err


def test_descent_fit_both_panels(synthetic_artifacts):
    out1 = synthetic_artifacts["dir"] / "fit1.png"
    out2 = synthetic_artifacts["dir"] / "fit2.png"
    for out in (out1, out2):
        code = descent_main(["--m-sweep", str(synthetic_artifacts["sweep_m"]),
                             "--alpha-sweep", str(synthetic_artifacts["sweep_alpha"]),
                             "--out", str(out)])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_descent_fit_requires_an_input(tmp_path, capsys):
    code = descent_main(["--out", str(tmp_path / "x.png")])
    assert code == 1


def test_target_comparison(synthetic_artifacts):
    out = synthetic_artifacts["dir"] / "targets.svg"
    code = targets_main(["--trajectory",
                         f"f1={synthetic_artifacts['trajectory']}",
                         f"again={synthetic_artifacts['trajectory']}",
                         "--out", str(out), "--format", "svg"])
    assert code == 0
    assert out.exists()


def test_target_comparison_rejects_unlabeled(synthetic_artifacts, capsys):
    code = targets_main(["--trajectory", str(synthetic_artifacts["trajectory"]),
                         "--out", str(synthetic_artifacts["dir"] / "x.png")])
    assert code == 1
    assert "label=path" in capsys.readouterr().err
