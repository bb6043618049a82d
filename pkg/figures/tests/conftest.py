"""Synthetic schema=1 artifacts for renderer tests."""
import json
import math

import numpy as np
import pytest

COLUMNS = ("t,loss,K,Kprime,q_max,norm_a,norm_W,dir_sum_1,w2_rel,"
           "condensation_ratio,grad_inf_norm,theta_inf_norm")


def write_synthetic_trajectory(path, t_end=8.0, dt=0.02):
    t = np.arange(0.0, t_end, dt)
    K = 1.0 / (1.0 + (1.0 / 1e-4 - 1.0) * np.exp(-2.0 * t))
    loss = 0.52 - (K - 0.5 * K ** 2)
    norm = np.sqrt(K) + 1e-4
    w2 = 0.02 * np.exp(-t)
    with open(path, "w") as fh:
        fh.write("# schema=1\n")
        fh.write(COLUMNS + "\n")
        for i in range(t.shape[0]):
            row = [t[i], loss[i], K[i], 2 * K[i], 0.01 + 0.001 * t[i],
                   norm[i], norm[i] * (1 + 1e-4), norm[i] ** 2, w2[i],
                   1.0, 0.001, 0.05]
            fh.write(",".join(f"{v:.11e}" for v in row) + "\n")
    return path


def write_synthetic_milestones(path, with_milestones=True):
    doc = {"schema": 1, "beta": 0.05, "plateau_eps": 0.05}
    if with_milestones:
        doc.update({"T_p_emp": 2.78, "T_d_emp": 6.08, "T_sp_emp": 6.42,
                    "T_p_pred": 2.13, "T_d_pred": 4.26, "T_sp_pred": 8.52})
    else:
        doc.update({"T_p_emp": None, "T_d_emp": None, "T_sp_emp": None})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_synthetic_sweep(path, covariate="m"):
    header = ("m,alpha,target,seed,n,T_p_emp,T_d_emp,T_sp_emp,T_p_pred,"
              "T_d_pred,T_sp_pred,loss_initial,loss_final,stop_reason,status")
    rows = []
    if covariate == "m":
        for m in (1000, 5000, 10000, 20000):
            for seed in (0, 1, 2):
                td = 0.5 * math.log(m) + 1.8 + 0.02 * seed
                rows.append(f"{m},1.0,f1,{seed},250,1.0,{td:.11e},,2.0,"
                            f"{0.5 * math.log(m):.11e},8.0,5.2e-01,1.7e-02,"
                            "milestones,ok")
    else:
        for alpha in (0.75, 1.0, 1.25):
            for seed in (0, 1, 2):
                td = (2 * alpha - 1) / 2 * math.log(10000) + 1.8 + 0.02 * seed
                rows.append(f"10000,{alpha},f1,{seed},250,1.0,{td:.11e},,2.0,"
                            f"{(2 * alpha - 1) / 2 * math.log(10000):.11e},8.0,"
                            "5.2e-01,1.7e-02,milestones,ok")
    with open(path, "w") as fh:
        fh.write("# schema=1\n")
        fh.write(header + "\n")
        fh.write("\n".join(rows) + "\n")
    return path


@pytest.fixture
def synthetic_artifacts(tmp_path):
    return {
        "trajectory": write_synthetic_trajectory(tmp_path / "run.trajectory.csv"),
        "milestones": write_synthetic_milestones(tmp_path / "run.milestones.json"),
        "no_milestones": write_synthetic_milestones(
            tmp_path / "empty.milestones.json", with_milestones=False),
        "sweep_m": write_synthetic_sweep(tmp_path / "sweep_m.csv", "m"),
        "sweep_alpha": write_synthetic_sweep(tmp_path / "sweep_alpha.csv", "alpha"),
        "dir": tmp_path,
    }
