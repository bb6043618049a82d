"""Per-target comparison of the layer-norm ratio and the relative Wasserstein
distance over training, one curve per target function."""
from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import save_deterministic
from .schema import SchemaError, read_trajectory


def render(labeled_trajectories: list[tuple[str, str]], out_path, fmt="png") -> None:
    if not labeled_trajectories:
        raise SchemaError("need at least one label=trajectory.csv input")
    fig, (ax_ratio, ax_w2) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    for label, path in labeled_trajectories:
        cols = read_trajectory(path)
        ax_ratio.plot(cols["t"], cols["norm_a"] / cols["norm_W"], lw=1.2, label=label)
        ax_w2.plot(cols["t"], cols["w2_rel"], lw=1.2, label=label)
    ax_ratio.axhline(1.0, color="goldenrod", ls="--", lw=1)
    ax_ratio.set_xlabel("t")
    ax_ratio.set_ylabel(r"$\|a\|_2 / \|W\|_F$")
    ax_ratio.legend(frameon=False, fontsize=8)
    ax_w2.set_xlabel("t")
    ax_w2.set_ylabel(r"relative $W_2$")
    ax_w2.legend(frameon=False, fontsize=8)
    fig.suptitle("layer norm ratio and amplitude-distribution distance", fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    save_deterministic(fig, out_path, fmt)


def _parse_labeled(values: list[str]) -> list[tuple[str, str]]:
    out = []
    for item in values:
        if "=" not in item:
            raise SchemaError(f"expected label=path, got {item!r}")
        label, path = item.split("=", 1)
        out.append((label, path))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plateaulab-fig-targets",
        description="Compare layer-norm ratio and relative W2 across runs")
    parser.add_argument("--trajectory", nargs="+", required=True,
                        metavar="LABEL=CSV")
    parser.add_argument("--out", required=True)
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    try:
        args = parser.parse_args(argv)
        render(_parse_labeled(args.trajectory), args.out, fmt=args.format)
        return 0
    except SystemExit as exc:
        return 1 if exc.code else 0
    except (SchemaError, OSError, ValueError) as exc:
        print(f"plateaulab-fig-targets: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
