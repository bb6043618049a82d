"""Three-panel stage overview: training loss (log scale), layer norms, and
the relative Wasserstein distance between the layers' amplitude
distributions, with stage shading and milestone stars."""
from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import save_deterministic, shade_stages, star_milestones, warn
from .schema import SchemaError, read_milestones, read_trajectory


def render(trajectory_csv, milestones_json, out_path, fmt="png", shading=True) -> None:
    cols = read_trajectory(trajectory_csv)
    milestones = read_milestones(milestones_json) if milestones_json else {}
    t = cols["t"]

    fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.6))
    ax_loss, ax_norm, ax_w2 = axes

    ax_loss.semilogy(t, cols["loss"], color="black", lw=1.2)
    ax_loss.set_xlabel("t")
    ax_loss.set_ylabel("training loss")
    if shading:
        shade_stages(ax_loss, milestones, float(t[-1]))
    if not star_milestones(ax_loss, milestones, t, cols["loss"]):
        warn("no milestones present; rendering without stars")

    ax_norm.plot(t, cols["norm_a"], label="outer $\\|a\\|_2$", lw=1.2)
    ax_norm.plot(t, cols["norm_W"], label="inner $\\|W\\|_F$", lw=1.2, ls="--")
    ax_norm.set_xlabel("t")
    ax_norm.set_ylabel("weight norms")
    ax_norm.legend(frameon=False, fontsize=8)
    if shading:
        shade_stages(ax_norm, milestones, float(t[-1]))

    ax_w2.plot(t, cols["w2_rel"], color="#9467bd", lw=1.2)
    ax_w2.set_xlabel("t")
    ax_w2.set_ylabel("relative $W_2$")
    if shading:
        shade_stages(ax_w2, milestones, float(t[-1]))
    star_milestones(ax_w2, milestones, t, cols["w2_rel"])

    fig.suptitle(_title(milestones), fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.95))
    save_deterministic(fig, out_path, fmt)


def _title(milestones: dict) -> str:
    bits = []
    for key in ("T_p_emp", "T_d_emp", "T_sp_emp"):
        val = milestones.get(key)
        if val is not None:
            bits.append(f"{key.replace('_emp', '')} = {val:.3g}")
    return "stage overview" + (": " + ", ".join(bits) if bits else "")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plateaulab-fig-stages",
        description="Render the three-panel stage overview from a trajectory "
                    "CSV and its milestone JSON")
    parser.add_argument("--trajectory", required=True)
    parser.add_argument("--milestones", default=None)
    parser.add_argument("--out", required=True)
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    parser.add_argument("--no-shading", action="store_true")
    try:
        args = parser.parse_args(argv)
        render(args.trajectory, args.milestones, args.out, fmt=args.format,
               shading=not args.no_shading)
        return 0
    except SystemExit as exc:
        return 1 if exc.code else 0
    except (SchemaError, OSError, ValueError) as exc:
        print(f"plateaulab-fig-stages: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
