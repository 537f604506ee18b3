"""Figures for the experiment reports.

Each report writes its numbers as CSV first; the PNG files rendered here and
the gnuplot script for the trigonometric-feature figure are derived views of
those CSV files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def figsize(scale=1.0, ratio=None):
    ratio = (math.sqrt(5.0) - 1.0) / 2.0 if ratio is None else ratio
    width = 6.4 * scale
    return width, width * ratio


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(results, path):
    """Proliferation probability against d, one line per (n, ensemble, law)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        groups = {}
        for r in results:
            groups.setdefault((r.n, r.ensemble, r.law), []).append(r)
        for (n, ens, law), rows in sorted(groups.items()):
            rows = sorted(rows, key=lambda r: r.d)
            d = [r.d for r in rows]
            p = [r.p_hat for r in rows]
            ci = [r.ci_halfwidth for r in rows]
            ax.errorbar(d, p, yerr=ci, marker="o", ms=3, capsize=2, label=f"n={n} {ens}/{law}")
        ax.set_xscale("log")
        ax.set_xlabel("d")
        ax.set_ylabel("Pr(all support vectors)")
        ax.set_ylim(-0.03, 1.03)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_converse(table, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        x = np.arange(len(table))
        q = [r["q_hat"] for r in table]
        ci = [r["ci_halfwidth"] for r in table]
        ax.errorbar(x, q, yerr=ci, fmt="o", capsize=3, label="empirical")
        ax.plot(x, [r["thm3_bound"] for r in table], "k_", ms=14, mew=2, label="lower bound")
        ax.set_xticks(x, [f"n={r['n']}\nd={r['d']}" for r in table])
        ax.set_ylabel("Pr(some example is not a SV)")
        ax.set_ylim(-0.03, 1.03)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_buhot(table, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        delta = np.array([r["delta"] for r in table])
        ax.plot(delta, [r["sv_fraction_mean"] for r in table], "o", label="empirical mean")
        grid = np.geomspace(min(delta.min(), 0.02), max(delta.max(), 5.0), 200)
        small = 1 - np.sqrt(2 * grid / np.pi) * np.exp(-1 / (2 * grid))
        ax.plot(grid[grid < 1], small[grid < 1], "-", lw=1, label="small-delta branch")
        ax.plot(grid[grid >= 1], 0.952 / grid[grid >= 1], "--", lw=1, label="large-delta branch")
        ax.set_xscale("log")
        ax.set_xlabel("delta = n/d")
        ax.set_ylabel("fraction of support vectors")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_figure1(curves: dict, path):
    """Both decision functions over one period, training points as crosses."""
    decays = sorted(curves)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(decays), figsize=figsize(1.4, 0.4), squeeze=False)
        for ax, decay in zip(axes[0], decays):
            c = curves[decay]
            ax.plot(c["t"], c["svm"], lw=1, label="SVM")
            ax.plot(c["t"], c["interp"], lw=1, ls="--", label="least-norm interpolation")
            ax.plot(c["t_train"], c["y_train"], "rx", ms=5)
            nsv = int(np.sum(c["sv_mask"]))
            ax.set_title(f"eta_i = 1/i^{decay:g}   ({nsv}/{len(c['y_train'])} SVs)")
            ax.set_xlabel("t")
            ax.set_xlim(0, 2 * np.pi)
        axes[0][0].legend(frameon=False, loc="lower left")
        return _save(fig, path)


def write_gnuplot_figure1(curve_files: dict, train_files: dict, path):
    """Gnuplot script reproducing :func:`plot_figure1` from the curve CSV files."""
    decays = sorted(curve_files)
    lines = [
        "# gnuplot script: SVM vs least-norm interpolation on trigonometric features",
        "set datafile separator ','",
        "set terminal pngcairo size 1100,420",
        "set output 'figure1_gnuplot.png'",
        f"set multiplot layout 1,{len(decays)}",
        "set xrange [0:2*pi]",
        "set xlabel 't'",
    ]
    for decay in decays:
        lines += [
            f"set title 'eta_i = 1/i^{decay:g}'",
            f"plot '{curve_files[decay]}' every ::1 using 1:2 with lines title 'SVM', \\",
            f"     '{curve_files[decay]}' every ::1 using 1:3 with lines dt 2 title 'least-norm', \\",
            f"     '{train_files[decay]}' every ::1 using 1:2 with points pt 2 lc rgb 'red' notitle",
        ]
    lines.append("unset multiplot")
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
