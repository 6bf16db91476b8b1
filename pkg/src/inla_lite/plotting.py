"""Report figures for a finished fit (opt-in from the command line)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import effect_summaries  # noqa: E402


def _save(fig, path):
    # no timestamps in the file so reruns give the same bytes
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def rw2_curves(fit, out_dir):
    paths = []
    for b in fit.layout.blocks:
        if b.kind != "rw2":
            continue
        exp_mean, q = fit.latent.transformed(np.exp)
        sl = b.slice
        x = b.level_values
        fig, ax = plt.subplots(figsize=(5.5, 3.8))
        ax.fill_between(x, q[0.025][sl], q[0.975][sl], color="0.85", label="95% interval")
        ax.plot(x, exp_mean[sl], "k-", lw=1.5, label="posterior mean")
        ax.axhline(1.0, color="0.5", lw=0.8, ls=":")
        ax.set_xlabel(b.covariate)
        ax.set_ylabel(f"exp(f({b.covariate}))")
        ax.legend(frameon=False, fontsize=8)
        fig.tight_layout()
        path = Path(out_dir) / f"effect_{b.covariate}.png"
        _save(fig, path)
        paths.append(path)
    return paths


def hyper_densities(fit, out_dir):
    if not fit.hyper_log:
        return []
    k = len(fit.hyper_log)
    fig, axes = plt.subplots(1, k, figsize=(4.0 * k, 3.2), squeeze=False)
    for ax, m in zip(axes[0], fit.hyper_log):
        ax.plot(m.grid, m.density, "k-", lw=1.2)
        ax.set_xlabel(m.target)
        ax.set_ylabel("density")
    fig.tight_layout()
    path = Path(out_dir) / "hyperparameters.png"
    _save(fig, path)
    return [path]


def zone_forest(fit, out_dir):
    paths = []
    for name, rows in effect_summaries(fit).items():
        if not name.startswith("zone:"):
            continue
        fig, ax = plt.subplots(figsize=(5.0, 0.45 * len(rows) + 1.2))
        ys = np.arange(len(rows))[::-1]
        for y, r in zip(ys, rows):
            ax.plot([r.exp_lower, r.exp_upper], [y, y], "k-", lw=1.2)
            ax.plot(r.exp_mean, y, "ks", ms=4)
        ax.axvline(1.0, color="0.5", lw=0.8, ls=":")
        ax.set_yticks(ys)
        ax.set_yticklabels([r.level for r in rows], fontsize=8)
        ax.set_xlabel("exp(effect)")
        fig.tight_layout()
        path = Path(out_dir) / f"{name.replace(':', '_')}.png"
        _save(fig, path)
        paths.append(path)
    return paths


def render_report(fit, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return rw2_curves(fit, out_dir) + hyper_densities(fit, out_dir) + zone_forest(fit, out_dir)
