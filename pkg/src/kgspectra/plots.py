"""Figure rendering for sweep and curve outputs.

Rendering is optional and file-based: the CLI writes the figure next to the
delimited output when asked to. matplotlib stays an import-on-use
dependency so data-only runs never touch it.
"""

from __future__ import annotations

import math

__all__ = ["save_sweep_figure", "save_curve_figure"]


def _axes(title: str, xlabel: str):
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("E  (units of m)")
    ax.set_title(title)
    ax.axhline(0.0, color="0.8", lw=0.8, zorder=0)
    return fig, ax


def save_sweep_figure(curve, path: str, title: str | None = None) -> None:
    """Render E against the swept parameter; gaps are left open."""
    name = curve.family.sweep_param or "a"
    fig, ax = _axes(title or f"eigenvalue sweep over {name}", name)
    good = [p for p in curve.points if p.converged and math.isfinite(p.e)]
    bad = [p for p in curve.points if not p.converged]
    ax.plot([p.a for p in good], [p.e for p in good], "o-", ms=3.5, lw=1.0,
            color="tab:blue", label="E")
    if bad:
        for p in bad:
            ax.axvline(p.a, color="tab:red", lw=0.6, alpha=0.4)
        ax.plot([], [], color="tab:red", lw=0.6, alpha=0.6, label="no state")
    if any(p.a > 0 for p in good) and len(good) > 2:
        ratio = max(p.a for p in good) / min(p.a for p in good)
        if ratio > 30:
            ax.set_xscale("log")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    import matplotlib.pyplot as plt

    plt.close(fig)


def save_curve_figure(curve, path: str, title: str | None = None) -> None:
    """Render a traced (possibly folded) branch in the (a, E) plane."""
    name = curve.family.sweep_param or "a"
    fig, ax = _axes(title or "spectral curve", name)
    pts = [p for p in curve.points if math.isfinite(p.e) and math.isfinite(p.a)]
    ax.plot([p.a for p in pts], [p.e for p in pts], "-", lw=1.0, color="tab:blue")
    ax.plot([p.a for p in pts], [p.e for p in pts], "o", ms=3.0, color="tab:blue")
    if curve.fold is not None:
        a_star, e_star = curve.fold
        ax.plot([a_star], [e_star], "D", ms=6, color="tab:orange",
                label=f"fold a*={a_star:.4g}, E*={e_star:.4g}")
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    import matplotlib.pyplot as plt

    plt.close(fig)
