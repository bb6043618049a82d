"""plateaulab: gradient-flow training dynamics of two-layer networks
under small initialization, with three-stage loss-curve diagnostics."""

__version__ = "0.1.0"

from .activations import (Activation, ActivationError, activation_from_callable,
                          identity_activation, tanh_activation)
from .datasets import (AffineMap, AssumptionCheck, Dataset, DatasetError,
                       MomentReport, check_assumptions, load_dataset_csv,
                       make_dataset, normalize_dataset, pad_dataset,
                       save_dataset_csv)
from .diagnostics import (AmplitudeDistributions, DepartureDiagnostic,
                          MacroQuantities, MilestonePrediction, MilestoneReport,
                          amplitude_distributions, condensation_ratio,
                          conservation_residual, critical_point_ratio,
                          departure_diagnostic, detect_milestones,
                          macro_quantities, predict_milestones, q_max,
                          relative_w2, wasserstein_1d)
from .dynamics import (DivergenceError, LossBelow, MilestoneStop, Trajectory,
                       UpdateDecomposition, decompose_update, linearized_solution,
                       logistic_K, r_max, run, step)
from .io import (read_trajectory_csv, trajectory_summary, write_json,
                 write_trajectory_csv)
from .model import (ConfigError, NetworkState, RiskEval, RunConfig, evaluate,
                    forward, gradient, init_params, risk)
from .sweep import (FitResult, SweepResult, SweepSpec, fit_descent_time,
                    load_sweep_csv, run_sweep)

__all__ = [
    "Activation", "ActivationError", "activation_from_callable",
    "identity_activation", "tanh_activation",
    "AffineMap", "AssumptionCheck", "Dataset", "DatasetError", "MomentReport",
    "check_assumptions", "load_dataset_csv", "make_dataset", "normalize_dataset",
    "pad_dataset", "save_dataset_csv",
    "AmplitudeDistributions", "DepartureDiagnostic", "MacroQuantities",
    "MilestonePrediction", "MilestoneReport", "amplitude_distributions",
    "condensation_ratio", "conservation_residual", "critical_point_ratio",
    "departure_diagnostic", "detect_milestones", "macro_quantities",
    "predict_milestones", "q_max", "relative_w2", "wasserstein_1d",
    "DivergenceError", "LossBelow", "MilestoneStop", "Trajectory",
    "UpdateDecomposition", "decompose_update", "linearized_solution",
    "logistic_K", "r_max", "run", "step",
    "read_trajectory_csv", "trajectory_summary", "write_json",
    "write_trajectory_csv",
    "ConfigError", "NetworkState", "RiskEval", "RunConfig", "evaluate",
    "forward", "gradient", "init_params", "risk",
    "FitResult", "SweepResult", "SweepSpec", "fit_descent_time",
    "load_sweep_csv", "run_sweep",
]
