"""Shared fixtures (including the heavy reproduction runs) and the
acceptance-suite summary hook."""
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

from plateaulab import (Dataset, MilestoneStop, NetworkState, RunConfig,
                        evaluate, identity_activation, make_dataset,
                        normalize_dataset, pad_dataset, run, tanh_activation)

ARTIFACTS_DIR = Path(__file__).resolve().parent.parent / "artifacts" / "acceptance"


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile (or load from cache) the fused kernels outside any timed region."""
    act = tanh_activation()
    data1 = make_dataset("f2", n=8, lo=-1.0, hi=1.0)
    st1 = NetworkState(a=np.full(4, 0.1), W=np.full((4, 1), 0.1))
    evaluate(st1, data1, act)
    data3 = Dataset(points=np.ones((4, 3)) * 0.3, weights=np.full(4, 0.25),
                    targets=np.zeros(4))
    st3 = NetworkState(a=np.full(4, 0.1), W=np.full((4, 3), 0.1))
    evaluate(st3, data3, act)


@pytest.fixture(scope="session")
def tanh_act():
    return tanh_activation()


@pytest.fixture(scope="session")
def identity_act():
    return identity_activation()


@pytest.fixture(scope="session")
def norm_grid_f1():
    """Normalized 201-point f1 grid: unit moments, d = 1."""
    return make_dataset("f1", n=201, lo=-15.0, hi=15.0, normalize=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_dataset(rng, n, d):
    """Small random dataset with normalized weights (not moment-normalized)."""
    pts = rng.normal(size=(n, d))
    w = rng.uniform(0.5, 1.5, size=n)
    w = w / w.sum()
    y = rng.normal(size=n)
    return Dataset(points=pts, weights=w, targets=y)


# --- heavy reproduction fixtures (shared by acceptance + reproduction tests) --

FIG1_SEED = 3  # acceptance configuration; see notes on beta-crossing granularity


@pytest.fixture(scope="session")
def fig1_run(_warm_kernels):
    """The three-stage reproduction run: m=5000, alpha=1, f1 target on the
    normalized 1000-point grid, Euler step 1e-3, through the secondary
    plateau and its nonlinear departure precursor (t <= 20)."""
    data = make_dataset("f1", n=1000, lo=-15.0, hi=15.0, normalize=True)
    config = RunConfig(m=5000, d=1, alpha=1.0, seed=FIG1_SEED, step_size=1e-3,
                       max_time=20.0, record_stride=10)
    t0 = time.perf_counter()
    traj = run(config, data, tanh_activation())
    elapsed = time.perf_counter() - t0
    return {"traj": traj, "data": data, "elapsed": elapsed, "config": config}


@pytest.fixture(scope="session")
def fig1_run_d3(_warm_kernels):
    """Condensation check run: the same setting padded to d=3 with two
    seeded zero-signal directions, normalized, stopped at the descent
    milestone."""
    data = normalize_dataset(pad_dataset(make_dataset("f1", n=1000), 2, seed=0))
    config = RunConfig(m=5000, d=3, alpha=1.0, seed=FIG1_SEED, step_size=1e-3,
                       max_time=10.0, record_stride=10)
    traj = run(config, data, tanh_activation(), stop=MilestoneStop(("T_d",)))
    return {"traj": traj, "data": data, "config": config}


# --- acceptance summary -------------------------------------------------------

_ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance.py" in report.nodeid and "::test_criterion" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[name]
        mark = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{mark}: {name}")
