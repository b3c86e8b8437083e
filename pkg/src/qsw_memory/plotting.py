"""Figures for experiment reports.  Everything renders off-screen to PNG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "axes.linewidth": 0.6,
    "font.size": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.0,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [6.0, 6.0 / 1.6],
    "figure.dpi": 100,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    # no software/version stamp so reruns produce identical files
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trajectory(rows: dict, path, title: str = ""):
    """Populations, norm and dark fraction against time.

    ``rows`` maps column name -> array and must contain ``t``.
    """
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 4.5))
        t = rows["t"]
        for key in rows:
            if key.startswith("n_"):
                ax0.plot(t, rows[key], label=key)
        ax0.set_ylabel("occupation")
        ax0.legend(frameon=False, ncol=3)
        ax1.plot(t, rows["norm"] ** 2, label="norm$^2$")
        if "P_dark" in rows and np.all(np.isfinite(rows["P_dark"])):
            ax1.plot(t, rows["P_dark"], "--", label="$P_{dark}$")
        ax1.set_xlabel("t  [1/G]")
        ax1.legend(frameon=False)
        if "omega" in rows:
            axr = ax1.twinx()
            axr.plot(t, rows["omega"], color="0.6", lw=0.7)
            axr.set_ylabel(r"$\Omega$  [G]", color="0.4")
        if title:
            ax0.set_title(title)
        return _save(fig, path)


def plot_spectrum(reports: list, path):
    """Eigenvalues in units of the dressed gap, one column per sector."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for rep in reports:
            eps = rep["epsilon"]
            ev = np.asarray(rep["eigenvalues"]) / eps
            ax.plot(np.full(ev.size, rep["sector"]) + 0.1 * (rep["draw"] % 5 - 2) / 2, ev, "_", ms=6,
                    color="k" if rep["passed"] else "r")
        ax.set_xlabel("excitation sector M")
        ax.set_ylabel(r"$E / \varepsilon$")
        return _save(fig, path)


def plot_connection(blocks: list, path):
    """Largest dark-dark and dark-bright entries per angle."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        th = [b["theta"] for b in blocks]
        dd = [max(b["max_dark_dark"], 1e-18) for b in blocks]
        db = [b["max_dark_bright"] for b in blocks]
        ax.semilogy(th, dd, "o-", label="dark-dark")
        ax.semilogy(th, db, "s-", label="dark-bright")
        ax.set_xlabel(r"$\theta$")
        ax.set_ylabel("max |connection entry|")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_commutators(report: dict, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        names = sorted({k for sec in report.values() for k in sec})
        for M, sec in sorted(report.items(), key=lambda kv: int(kv[0])):
            ax.semilogy(range(len(names)), [max(sec.get(n, np.nan), 1e-18) for n in names], "o", label=f"M={M}")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=45, ha="right")
        ax.set_ylabel("operator norm")
        ax.legend(frameon=False, ncol=3, fontsize=6)
        return _save(fig, path)


def plot_density_matrix(rho, path, title: str = ""):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 3.5))
        im = ax.imshow(np.abs(rho), cmap="viridis", origin="lower")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("n")
        ax.set_ylabel("n'")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_finite_N(Ns, deviations, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        Ns = np.asarray(Ns, dtype=float)
        d = np.asarray(deviations, dtype=float)
        ax.loglog(Ns, d, "o-", label=r"$|F(N) - F_{boson}|$")
        if d.size and d[0] > 0:
            ax.loglog(Ns, d[0] * Ns[0] / Ns, ":", color="0.5", label=r"$\propto 1/N$")
        ax.set_xlabel("N")
        ax.set_ylabel("deviation")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_sweep(values, metric, path, axis: str, metric_name: str):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(values, metric, "o-")
        ax.set_xlabel(axis)
        ax.set_ylabel(metric_name)
        return _save(fig, path)
