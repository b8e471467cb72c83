"""Figure rendering for command outputs.

All figures go to files through the Agg backend; nothing here opens a
display.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 130

plt.rcParams.update(
    {
        "axes.grid": True,
        "grid.alpha": 0.3,
        "axes.titlesize": 11,
        "axes.labelsize": 10,
        "legend.fontsize": 9,
        "figure.autolayout": True,
    }
)


def _new_axes(xlabel, ylabel, title):
    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return fig, ax


def _finish(fig, path):
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_curve_figure(path, xs, values, alts, barrier, kind):
    fig, ax = _new_axes("starting level x", "expected discounted value",
                        "optimal {} value and suboptimal barriers".format(kind))
    for label, vals in alts:
        ax.plot(xs, vals, lw=1.0, ls="--", alpha=0.8, label=label)
    ax.plot(xs, values, lw=2.0, color="black", label="optimal")
    ax.axvline(barrier, color="gray", lw=0.8, ls=":")
    ax.legend(loc="best")
    _finish(fig, path)


def save_fcurve_figure(path, bs, vals, level, label):
    fig, ax = _new_axes("candidate barrier b", label,
                        "barrier equation and its root")
    ax.plot(bs, vals, lw=1.6)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.axvline(level, color="red", lw=0.9, ls=":",
               label="solution {:.6g}".format(level))
    ax.legend(loc="best")
    _finish(fig, path)


def save_hjb_figure(path, grid, residual, gen_gap, tol, barrier):
    fig, ax = _new_axes("starting level x", "absolute residual",
                        "optimality equation residuals on the grid")
    tiny = 1e-18
    ax.semilogy(grid, np.maximum(np.abs(residual), tiny), lw=1.4,
                label="HJB residual")
    ax.semilogy(grid, np.maximum(np.abs(gen_gap), tiny), lw=1.0, ls="--",
                label="generator vs closed form")
    ax.axhline(tol, color="red", lw=0.9, ls=":", label="tolerance")
    ax.axvline(barrier, color="gray", lw=0.8, ls=":")
    ax.legend(loc="best")
    _finish(fig, path)


def save_simulate_figure(path, xs_curve, curve_vals, x_eval, means, stderrs):
    fig, ax = _new_axes("starting level x", "expected discounted value",
                        "simulation against the closed form")
    ax.plot(xs_curve, curve_vals, lw=1.6, color="black", label="closed form")
    ax.errorbar(x_eval, means, yerr=3.0 * np.asarray(stderrs), fmt="o",
                ms=4, capsize=3, color="tab:red", label="simulation (3 s.e.)")
    ax.legend(loc="best")
    _finish(fig, path)


def save_sweep_figure(path, xvals, barriers, xlabel, log_x, classical=None):
    fig, ax = _new_axes(xlabel, "optimal barrier",
                        "barrier response to {}".format(xlabel))
    if log_x:
        ax.semilogx(xvals, barriers, "o-", lw=1.4, ms=4)
    else:
        ax.plot(xvals, barriers, "o-", lw=1.4, ms=4)
    if classical is not None:
        ax.axhline(classical, color="gray", lw=0.9, ls="--",
                   label="continuous-observation limit")
        ax.legend(loc="best")
    _finish(fig, path)
