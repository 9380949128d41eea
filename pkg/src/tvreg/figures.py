"""Figure rendering for CLI reports.

Each renderer takes the already-serialized payload of a command and
writes one PNG next to the delimited output file.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_TRUE_KIND = {"A": "I", "B": "II", "C": "III", "D": "IV"}


def save_study_figure(records, path):
    """Correct-selection proportion against sample size, one panel per
    noise level and one line per design."""
    phis = sorted({r.phi for r in records})
    designs = sorted({r.design.value for r in records})
    fig, axes = plt.subplots(1, len(phis), figsize=(4.2 * len(phis), 3.4), squeeze=False)
    for ax, phi in zip(axes[0], phis):
        for design in designs:
            rows = sorted(
                (r for r in records if r.phi == phi and r.design.value == design),
                key=lambda r: r.n,
            )
            ns = [r.n for r in rows]
            props = [r.result.proportions[_TRUE_KIND[design]] for r in rows]
            ax.plot(ns, props, marker="o", label=f"design {design.lower()}")
        ax.set_xlabel("n")
        ax.set_ylabel("correct selection")
        ax.set_ylim(0.0, 1.05)
        ax.set_title(f"noise level {phi:g}")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_selection_figure(report, path):
    """Criterion value per candidate model, the chosen one highlighted."""
    labels = [kind.label for kind in report.rows]
    values = [report.rows[kind].gic for kind in report.rows]
    colors = ["tab:red" if kind is report.chosen else "tab:blue" for kind in report.rows]
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.bar(labels, values, color=colors)
    ax.set_xlabel("model")
    ax.set_ylabel("criterion")
    ax.set_title(f"chosen: {report.chosen.label} (tau={report.tau:.3g})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_fit_figure(payload, path):
    """Render the grid export of a fit command."""
    model = payload["model"]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if model == "I":
        u = np.asarray(payload["u"])
        t = np.asarray(payload["t"])
        values = np.asarray(payload["values"], dtype=float)
        mesh = ax.pcolormesh(t, u, values, shading="auto")
        fig.colorbar(mesh, ax=ax, label="fitted value")
        ax.set_xlabel("t")
        ax.set_ylabel("u")
    elif model == "II":
        u = np.asarray(payload["u"])
        values = np.asarray(payload["values"], dtype=float)
        ax.plot(u, values)
        ax.set_xlabel("u")
        ax.set_ylabel("fitted value")
    elif model == "III":
        t = np.asarray(payload["t"])
        betas = np.asarray(payload["values"], dtype=float)
        for j in range(betas.shape[1]):
            ax.plot(t, betas[:, j], label=payload["columns"][j])
        ax.set_xlabel("t")
        ax.set_ylabel("coefficient")
        ax.legend(fontsize=8)
    else:
        names = payload["columns"]
        theta = np.asarray(payload["values"], dtype=float)
        ax.bar(names, theta)
        ax.set_ylabel("coefficient")
    ax.set_title(f"model {model}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
