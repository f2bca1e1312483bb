"""Figures for the reduction and jet pipelines, written straight to files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .reduction import eval_tilde  # noqa: E402

__all__ = ["plot_reduction", "plot_pipeline"]


def plot_reduction(res, path) -> None:
    """Log-log plot of the reduced pair against the inputs on ``[x_2, x_(n_max)]``."""
    lo, hi = res.range
    t = np.geomspace(lo, hi, 600)
    w, s = res.inputs.w, res.inputs.sigma
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(t, w(t), lw=1, color="0.5", label="omega")
    ax.loglog(t, eval_tilde(res, "omega", t), lw=1.5, label="omega~")
    ax.loglog(t, s(t), lw=1, ls="--", color="0.5", label="sigma")
    ax.loglog(t, eval_tilde(res, "sigma", t), lw=1.5, ls="--", label="sigma~")
    for x in res.x[1:]:
        ax.axvline(x, color="0.85", lw=0.6, zorder=0)
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_pipeline(report, path) -> None:
    """Jet growth profile ``g(k)`` with the interpolant and the final bound."""
    prof, h = report.artifacts.get("profile"), report.artifacts.get("h")
    if prof is None:
        raise ValueError("pipeline stopped before the growth profile was computed")
    k = np.arange(prof.p_max + 2)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.step(k, prof.g_steps(), where="post", label="g")
    if h is not None:
        tt = np.linspace(0, k[-1], 300)
        ax.plot(tt, h(tt), label="h")
    ax.set_xlabel("k")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
