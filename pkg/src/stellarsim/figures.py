"""Figure rendering for sweep reports.

Kept separate from the data path: sweeps always emit CSV, and a figure is
rendered next to it only on request.  matplotlib is imported lazily with the
Agg backend so headless runs work.
"""

from __future__ import annotations


def render_sweep_figure(rows: list[dict], path: str) -> None:
    """Log-log multiplicative error vs xi, one thin line per instance.

    ``rows`` are sweep records with keys instance, protocol, xi, mult_error.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    import numpy as np

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    protocols = sorted({r["protocol"] for r in rows})
    by_instance: dict[tuple, list[dict]] = {}
    for r in rows:
        by_instance.setdefault((r["protocol"], r["instance"]), []).append(r)
    for (_, _), group in sorted(by_instance.items()):
        group = sorted(group, key=lambda r: r["xi"])
        ax.plot(
            [g["xi"] for g in group],
            [g["mult_error"] for g in group],
            color="0.65",
            linewidth=0.8,
            zorder=1,
        )
    xis = sorted({r["xi"] for r in rows})
    medians = [
        float(np.median([r["mult_error"] for r in rows if r["xi"] == xi])) for xi in xis
    ]
    ax.plot(xis, medians, color="C1", linewidth=2.0, marker="o", label="median", zorder=2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$|P_\mathrm{est} - P_\mathrm{exact}| / P_\mathrm{exact}$")
    ax.set_title("estimate quality (" + ", ".join(protocols) + ")")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
