"""Descent-time scaling panels: T_d against alpha and against log m, per-cell
means with min/max whiskers and a least-squares line."""
from __future__ import annotations

import argparse
import math
import sys

import matplotlib.pyplot as plt
import numpy as np

from .render import save_deterministic, warn
from .schema import SchemaError, read_sweep


def _cell_means(rows, x_of):
    cells = {}
    for r in rows:
        if r.get("status") != "ok" or r.get("T_d_emp") is None:
            continue
        cells.setdefault(x_of(r), []).append(r["T_d_emp"])
    xs = np.array(sorted(cells))
    means = np.array([np.mean(cells[x]) for x in xs])
    lo = np.array([min(cells[x]) for x in xs])
    hi = np.array([max(cells[x]) for x in xs])
    return xs, means, lo, hi


def _panel(ax, rows, covariate):
    if covariate == "alpha":
        x_of = lambda r: r["alpha"]
        xlabel = r"$\alpha$"
    else:
        x_of = lambda r: math.log(r["m"])
        xlabel = r"$\log m$"
    xs, means, lo, hi = _cell_means(rows, x_of)
    if xs.size == 0:
        warn(f"no detected descent milestones for the {covariate} panel")
        return
    ax.errorbar(xs, means, yerr=[means - lo, hi - means], fmt="o", ms=4,
                capsize=3, lw=1, color="#1f77b4", label="measured")
    if xs.size >= 2:
        slope, intercept = np.polyfit(xs, means, 1)
        grid = np.linspace(xs.min(), xs.max(), 50)
        ax.plot(grid, slope * grid + intercept, color="#d62728", lw=1,
                label=f"fit: slope {slope:.3f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$T_d$")
    ax.legend(frameon=False, fontsize=8)


def render(m_sweep_csv, alpha_sweep_csv, out_path, fmt="png") -> None:
    panels = [(path, cov) for path, cov in
              ((alpha_sweep_csv, "alpha"), (m_sweep_csv, "log_m")) if path]
    if not panels:
        raise SchemaError("need at least one of --m-sweep / --alpha-sweep")
    fig, axes = plt.subplots(1, len(panels), figsize=(4.4 * len(panels), 3.4),
                             squeeze=False)
    for ax, (path, covariate) in zip(axes[0], panels):
        _panel(ax, read_sweep(path), covariate)
    fig.suptitle("descent time scaling", fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    save_deterministic(fig, out_path, fmt)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plateaulab-fig-descent",
        description="Render descent-time scaling panels from sweep CSVs")
    parser.add_argument("--m-sweep", default=None, help="sweep CSV varying m")
    parser.add_argument("--alpha-sweep", default=None, help="sweep CSV varying alpha")
    parser.add_argument("--out", required=True)
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    try:
        args = parser.parse_args(argv)
        render(args.m_sweep, args.alpha_sweep, args.out, fmt=args.format)
        return 0
    except SystemExit as exc:
        return 1 if exc.code else 0
    except (SchemaError, OSError, ValueError) as exc:
        print(f"plateaulab-fig-descent: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
