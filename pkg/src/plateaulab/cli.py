"""Command-line harness: train, sweep, fit, predict, check-data, version.

Exit codes: 0 success, 1 usage or validation error, 2 numeric failure
(divergence), 3 sweep finished with failed cells.  The output directory
can be overridden with the PLATEAULAB_OUTDIR environment variable; flags
override values from an optional --config JSON file.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .activations import tanh_activation
from .datasets import (DatasetError, check_assumptions, load_dataset_csv,
                       make_dataset, normalize_dataset, pad_dataset)
from .diagnostics import detect_milestones, predict_milestones
from .dynamics import DivergenceError, LossBelow, MilestoneStop, run
from .io import (SCHEMA, _fmt, milestone_dict, read_json, trajectory_summary,
                 write_json, write_trajectory_csv)
from .model import ConfigError, RunConfig
from .sweep import SweepSpec, fit_descent_time, load_sweep_csv, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _out_dir(args) -> Path:
    env = os.environ.get("PLATEAULAB_OUTDIR")
    out = Path(env) if env else Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_run_flags(p: _Parser) -> None:
    p.add_argument("--m", type=int, default=1000, help="network width")
    p.add_argument("--alpha", type=float, default=1.0, help="initialization exponent (> 1/2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-size", type=float, default=1e-3, help="Euler step / learning rate")
    p.add_argument("--max-time", type=float, default=10.0)
    p.add_argument("--record-stride", type=int, default=10)
    p.add_argument("--beta", type=float, default=0.05, help="descent-milestone threshold on K")
    p.add_argument("--plateau-eps", type=float, default=0.05, help="plateau detector threshold")
    p.add_argument("--integrator", choices=("euler", "rk4"), default="euler")


def _add_data_flags(p: _Parser) -> None:
    p.add_argument("--target", choices=("f1", "f2", "f3"), default="f1")
    p.add_argument("--n", type=int, default=1000, help="grid points")
    p.add_argument("--lo", type=float, default=-15.0)
    p.add_argument("--hi", type=float, default=15.0)
    p.add_argument("--normalize", action="store_true",
                   help="whiten inputs / rescale targets to exact unit moments")
    p.add_argument("--pad-dims", type=int, default=0,
                   help="append this many seeded zero-signal input directions")
    p.add_argument("--pad-seed", type=int, default=0)
    p.add_argument("--data", type=str, default=None,
                   help="load dataset from CSV (columns x_1..x_d, weight, target) "
                        "instead of generating a grid")


def _build_dataset(args):
    if args.data is not None:
        data = load_dataset_csv(args.data)
        if args.normalize:
            data = normalize_dataset(data)
        return data
    data = make_dataset(args.target, n=args.n, lo=args.lo, hi=args.hi)
    if args.pad_dims > 0:
        data = pad_dataset(data, args.pad_dims, seed=args.pad_seed)
    if args.normalize:
        data = normalize_dataset(data)
    return data


def _cmd_train(args) -> int:
    out = _out_dir(args)
    data = _build_dataset(args)
    config = RunConfig(m=args.m, d=data.d, alpha=args.alpha, seed=args.seed,
                       step_size=args.step_size, max_time=args.max_time,
                       record_stride=args.record_stride, beta=args.beta,
                       plateau_eps=args.plateau_eps, integrator=args.integrator)
    stop = None
    if args.stop == "T_d":
        stop = MilestoneStop(("T_d",))
    elif args.stop == "T_sp":
        stop = MilestoneStop(("T_d", "T_sp"))
    elif args.stop.startswith("loss:"):
        stop = LossBelow(float(args.stop.split(":", 1)[1]))
    traj = run(config, data, tanh_activation(), stop=stop)

    tag = args.tag or f"m{config.m}_a{config.alpha:g}_{args.target}_s{config.seed}"
    write_trajectory_csv(traj, out / f"{tag}.trajectory.csv")
    try:
        report = detect_milestones(traj)
        mdoc = {"schema": SCHEMA, **milestone_dict(report)}
    except ValueError:
        report = None
        mdoc = {"schema": SCHEMA, "detected": False,
                "reason": "too few records for milestone detection"}
    write_json(mdoc, out / f"{tag}.milestones.json")
    write_json(trajectory_summary(traj, report), out / f"{tag}.summary.json")
    print(f"{tag}: {traj.n_records} records, stop={traj.stop_reason}, "
          f"final loss {_fmt(float(traj.loss[-1]))}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    out = _out_dir(args)
    spec = SweepSpec(
        ms=tuple(int(v) for v in args.m.split(",")),
        alphas=tuple(float(v) for v in args.alpha.split(",")),
        targets=tuple(args.targets.split(",")),
        seeds=tuple(int(v) for v in args.seeds.split(",")),
        out_dir=str(out),
        n=args.n, lo=args.lo, hi=args.hi, normalize=not args.raw,
        step_size=args.step_size, record_stride=args.record_stride,
        beta=args.beta, plateau_eps=args.plateau_eps,
        max_time=args.max_time, stop_at=args.stop_at, workers=args.workers,
    )
    result = run_sweep(spec)
    print(f"sweep: {len(result.rows)} cells -> {result.sweep_csv}")
    if result.failures:
        for row in result.failures:
            print(f"  FAILED {row['m']}/{row['alpha']:g}/{row['target']}/s{row['seed']}: "
                  f"{row['status']}", file=sys.stderr)
        print(f"sweep: {len(result.failures)} cells failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_fit(args) -> int:
    rows = load_sweep_csv(args.sweep_csv)
    results = fit_descent_time(rows, args.covariate)
    docs = [r.to_dict() for r in results]
    if args.out:
        out = _out_dir(args)
        write_json({"schema": SCHEMA, "fits": docs}, out / "fit.json")
    for doc in docs:
        kind = "pooled" if doc["pooled"] else "cell-means"
        print(f"{doc['group']} [{kind}] slope={_fmt(doc['slope'])} "
              f"intercept={_fmt(doc['intercept'])} r2={_fmt(doc['r2'])}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    pred = predict_milestones(args.alpha, args.m, args.beta)
    doc = {"schema": SCHEMA, "alpha": args.alpha, "m": args.m, "beta": args.beta,
           "T_p_pred": pred.T_p, "T_d_pred": pred.T_d, "T_sp_pred": pred.T_sp,
           "alpha1": pred.alpha1, "gamma1": pred.gamma1}
    print(json.dumps({k: (float(_fmt(v)) if isinstance(v, float) else v)
                      for k, v in doc.items()}, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_check_data(args) -> int:
    data = _build_dataset(args)
    check = check_assumptions(data, tol=args.tol)
    doc = {
        "schema": SCHEMA,
        "n": data.n, "d": data.d, "tol": args.tol,
        "second_moment_dev": float(_fmt(check.second_moment_dev)),
        "leading_term_dev": float(_fmt(check.leading_term_dev)),
        "symmetric_sampling_ok": check.symmetric_sampling_ok,
        "leading_term_ok": check.leading_term_ok,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _load_config_defaults(argv: list[str]) -> dict:
    if "--config" not in argv:
        return {}
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return {}
    path = argv[idx + 1]
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise DatasetError(f"{path}: config file must hold a JSON object")
    return {key.replace("-", "_"): value for key, value in doc.items()}


def build_parser(config_defaults: dict | None = None) -> _Parser:
    parser = _Parser(prog="plateaulab",
                     description="Gradient-flow training dynamics lab for two-layer "
                                 "networks under small initialization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", parents=[], help="run one trajectory")
    _add_run_flags(p_train)
    _add_data_flags(p_train)
    p_train.add_argument("--stop", default="max-time",
                         help="max-time | T_d | T_sp | loss:<threshold>")
    p_train.add_argument("--out", default="runs")
    p_train.add_argument("--tag", default=None)
    p_train.add_argument("--config", default=None, help="JSON file with flag defaults")
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="grid of runs over m/alpha/target/seed")
    p_sweep.add_argument("--m", default="1000,5000,10000")
    p_sweep.add_argument("--alpha", default="1.0")
    p_sweep.add_argument("--targets", default="f1")
    p_sweep.add_argument("--seeds", default="0,1,2")
    p_sweep.add_argument("--n", type=int, default=250)
    p_sweep.add_argument("--lo", type=float, default=-15.0)
    p_sweep.add_argument("--hi", type=float, default=15.0)
    p_sweep.add_argument("--raw", action="store_true",
                         help="skip dataset normalization (milestones may not fire)")
    p_sweep.add_argument("--step-size", type=float, default=1e-3)
    p_sweep.add_argument("--record-stride", type=int, default=10)
    p_sweep.add_argument("--beta", type=float, default=0.05)
    p_sweep.add_argument("--plateau-eps", type=float, default=0.05)
    p_sweep.add_argument("--max-time", type=float, default=None)
    p_sweep.add_argument("--stop-at", choices=("T_d", "T_sp", "max_time"), default="T_d")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--out", default="sweep_out")
    p_sweep.add_argument("--config", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fit = sub.add_parser("fit", help="OLS of T_d against log m or alpha")
    p_fit.add_argument("--sweep-csv", required=True)
    p_fit.add_argument("--covariate", choices=("log_m", "alpha"), required=True)
    p_fit.add_argument("--out", default=None)
    p_fit.add_argument("--config", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="theory milestones from (alpha, m, beta)")
    p_pred.add_argument("--alpha", type=float, required=True)
    p_pred.add_argument("--m", type=int, required=True)
    p_pred.add_argument("--beta", type=float, default=0.05)
    p_pred.add_argument("--config", default=None)
    p_pred.set_defaults(func=_cmd_predict)

    p_check = sub.add_parser("check-data", help="moment-condition report for a dataset")
    _add_data_flags(p_check)
    p_check.add_argument("--tol", type=float, default=1e-8)
    p_check.add_argument("--config", default=None)
    p_check.set_defaults(func=_cmd_check_data)

    p_ver = sub.add_parser("version", help="print version and schema")
    p_ver.set_defaults(func=lambda args: (print(f"plateaulab {__version__} schema={SCHEMA}"),
                                          EXIT_OK)[1])

    if config_defaults:
        for action in parser._subparsers._group_actions:  # noqa: SLF001
            for sp in action.choices.values():
                known = {a.dest for a in sp._actions}  # noqa: SLF001
                usable = {k: v for k, v in config_defaults.items() if k in known}
                sp.set_defaults(**usable)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = _load_config_defaults(argv)
        parser = build_parser(defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, DatasetError, ValueError) as exc:
        print(f"plateaulab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"plateaulab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"plateaulab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
