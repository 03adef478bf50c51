"""Figure rendering for the CLI report path.

Every subcommand that writes delimited output also drops a PNG next to it
so a run is inspectable without a separate plotting step.  All rendering
goes through the Agg backend; nothing here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "figure.dpi": 130,
    "savefig.bbox": "tight",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})


def spectrum_figure(n, e_lab, e_rot, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7, 3.2))
    for ax, levels, title in ((ax1, e_lab, "lab frame"),
                              (ax2, e_rot, "rotating frame")):
        ax.hlines(levels, -0.35, 0.35, lw=1.4)
        ax.set_xticks([])
        ax.set_ylabel(r"$E_n\ (\hbar\Omega)$")
        ax.set_title(title)
    fig.savefig(path)
    plt.close(fig)


def bifurcation_figure(diag_classical, diag_shifted, shifted_ratio, path):
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2), sharey=True)
    for ax, diag, title in ((axes[0], diag_classical, "bare detuning"),
                            (axes[1], diag_shifted, "quantum-shifted detuning")):
        for j, style in enumerate(("-", "--", "-")):
            ax.plot(diag.drive_ratios, diag.roots[:, j], style, lw=1.3,
                    color="C0" if j != 1 else "C3")
        ax.set_xlabel(r"$F_0/F_c$")
        ax.set_title(title)
    axes[0].set_ylabel(r"$|\tilde x|^2$")
    axes[1].axvline(shifted_ratio, color="k", ls=":", lw=1)
    fig.savefig(path)
    plt.close(fig)


def evolution_figure(record, path):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 4.6), sharex=True)
    ax1.plot(record.times, record.x_bar_re, lw=1.0)
    ax1.set_ylabel(r"$\bar{x}$")
    ax2.semilogy(record.times, np.clip(record.p_s, 1e-12, None), lw=1.0)
    ax2.set_ylabel(r"$P_S$")
    ax2.set_xlabel(r"$t$ (drive periods)")
    fig.savefig(path)
    plt.close(fig)


def hysteresis_figure(branches, shifted_ratio, path):
    """branches: mapping init-name -> (ratios, x_bar_re)."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    markers = {"sas": "o", "las": "s"}
    for name, (ratios, xs) in branches.items():
        ax.plot(ratios, xs, markers.get(name, "."), ms=4.5, mfc="none",
                label=f"{name} start")
    ax.axvline(shifted_ratio, color="k", ls=":", lw=1,
               label="shifted bifurcation")
    ax.set_xlabel(r"$F_0/F_c$")
    ax.set_ylabel(r"$\bar{x}$ at $t_{\rm final}$")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)


def wigner_figure(grid, path, centers=(), title=""):
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    vmax = float(np.abs(grid.values).max())
    im = ax.pcolormesh(grid.x_axis, grid.p_axis, grid.values, cmap="RdBu_r",
                       vmin=-vmax, vmax=vmax, shading="auto")
    for cx, cp in centers:
        ax.axvline(cx, color="k", ls="--", lw=0.8)
        ax.plot([cx], [cp], "k+", ms=8)
    fig.colorbar(im, ax=ax, label=r"$W(x, p)$")
    ax.set_xlabel(r"$x$")
    ax.set_ylabel(r"$p$")
    if title:
        ax.set_title(title)
    fig.savefig(path)
    plt.close(fig)


def rate_figure(fit, record, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.semilogy(record.times, np.clip(record.p_s, 1e-12, None), ".", ms=3,
                label=r"$P_S(t)$")
    tw = np.asarray(fit.times)
    ax.semilogy(tw, np.exp(fit.intercept - fit.gamma_t * tw), "-", lw=1.2,
                label=rf"fit: $\Gamma_t={fit.gamma_t:.3e}$/period")
    ax.set_xlabel(r"$t$ (drive periods)")
    ax.set_ylabel(r"$P_S$")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)


def scaling_figure(result, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(result.etas, result.log_rates, "o", ms=5, mfc="none",
            label="measured")
    es = np.linspace(result.etas.min(), result.etas.max(), 200)
    ax.plot(es, result.c0 - result.c1 * es, "-", lw=1.2,
            label=(rf"linear; $\alpha$: {result.alpha_action:.3f} (action), "
                   rf"{result.alpha:.3f} ($\eta$-power)"))
    ax.set_xlabel(r"$\eta$  $[F_c^2]$")
    ax.set_ylabel(r"$\ln \Gamma_t$")
    ax.legend(frameon=False)
    fig.savefig(path)
    plt.close(fig)
