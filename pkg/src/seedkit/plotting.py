"""Matplotlib figures for comparison reports (headless, Agg backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

ARM_COLORS = {"original": "#1f77b4", "reduced": "#d62728"}

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 150,
}


def _step_points(curve, end_ms):
    xs, ys = [], []
    for t, v in curve:
        xs.append(t / 1000)
        ys.append(v)
    if xs and xs[-1] < end_ms / 1000:
        xs.append(end_ms / 1000)
        ys.append(ys[-1])
    return xs, ys


def plot_paths(times, averages, curves, path, title=None):
    """Average path count per arm, with the individual jobs drawn faintly behind."""
    end_ms = times[-1] if times else 0
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for arm, arm_curves in curves.items():
            color = ARM_COLORS.get(arm)
            for curve in arm_curves:
                xs, ys = _step_points(curve, end_ms)
                ax.step(xs, ys, where="post", color=color, alpha=0.25, linewidth=0.8)
            ax.step([t / 1000 for t in times], averages[arm], where="post",
                    color=color, linewidth=1.8, label=f"{arm} seed (mean of {len(arm_curves)})")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("number of paths")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
