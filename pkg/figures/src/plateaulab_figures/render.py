"""Deterministic matplotlib setup shared by the figure scripts.

Identical inputs must produce identical image bytes, so every savefig goes
through save_deterministic: Agg backend, fixed SVG hash salt, and no
date/creator metadata.
"""
from __future__ import annotations

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "plateaulab-figures"

STAGE_COLORS = {"plateau": "#d62728", "descent": "#1f77b4", "secondary": "#2ca02c"}
STAR_STYLE = dict(marker="*", s=140, zorder=5, edgecolors="black", linewidths=0.5)


def save_deterministic(fig, path, fmt: str) -> None:
    if fmt == "png":
        fig.savefig(path, format="png", dpi=110, metadata={"Software": None})
    elif fmt == "svg":
        fig.savefig(path, format="svg",
                    metadata={"Date": None, "Creator": None, "Format": None})
    else:
        raise ValueError(f"unsupported format {fmt!r}; use png or svg")
    plt.close(fig)


def shade_stages(ax, milestones: dict, t_end: float) -> None:
    """Color the three stages behind a curve when the milestones exist."""
    T_p = milestones.get("T_p_emp")
    T_d = milestones.get("T_d_emp")
    T_sp = milestones.get("T_sp_emp")
    if T_p is not None:
        ax.axvspan(0.0, T_p, color=STAGE_COLORS["plateau"], alpha=0.12, lw=0)
    if T_p is not None and T_d is not None:
        ax.axvspan(T_p, T_d, color=STAGE_COLORS["descent"], alpha=0.12, lw=0)
    if T_d is not None:
        ax.axvspan(T_d, T_sp if T_sp is not None else t_end,
                   color=STAGE_COLORS["secondary"], alpha=0.12, lw=0)


def star_milestones(ax, milestones: dict, t, y) -> bool:
    """Mark T_p/T_d/T_sp on the curve (t, y); returns False if none exist."""
    t = list(t)
    any_star = False
    for key, color in (("T_p_emp", STAGE_COLORS["plateau"]),
                       ("T_d_emp", STAGE_COLORS["descent"]),
                       ("T_sp_emp", STAGE_COLORS["secondary"])):
        tv = milestones.get(key)
        if tv is None:
            continue
        idx = min(range(len(t)), key=lambda i: abs(t[i] - tv))
        ax.scatter([t[idx]], [y[idx]], color=color, **STAR_STYLE)
        any_star = True
    return any_star


def warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)
