"""SVG figures: mean regret curves and the Pareto scatter.

Output is byte-stable for fixed inputs (fixed hash salt, no date stamp,
text rendered as paths so the file needs no fonts).
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "svg.hashsalt": "pareto-bandits",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_regret(curves: dict, path, title: str = "", log_x: bool = True):
    """One line per policy with a mean +/- stderr band."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for label, c in curves.items():
            m, s = c.mean, c.stderr
            ax.plot(c.checkpoints, m, label=label, lw=1.4)
            ax.fill_between(c.checkpoints, m - s, m + s, alpha=0.25, lw=0)
        if log_x:
            ax.set_xscale("log")
        ax.set_xlabel("round t")
        ax.set_ylabel("pseudo-regret")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_pareto(rows, path, title: str = "Pareto sweep"):
    """Benign-environment regret against hard-environment regret, one point per Z2."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        xs = [r.benign_regret for r in rows]
        ys = [r.hard_regret for r in rows]
        ax.errorbar(xs, ys, xerr=[r.benign_stderr for r in rows],
                    yerr=[r.hard_stderr for r in rows], fmt="o-", ms=4, lw=1, capsize=2)
        for r in rows:
            ax.annotate(f"Z2={r.z2:.3g}", (r.benign_regret, r.hard_regret),
                        textcoords="offset points", xytext=(4, 4), fontsize=7)
        ax.set_xlabel("regret, benign environment")
        ax.set_ylabel("regret, hard environment")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
