"""Matplotlib renderings of the report outputs.

pyplot is imported lazily inside each function so importing the package
never touches a GUI backend; the CLI forces Agg before calling in here.
Saved PNGs omit the Software metadata chunk so byte-identical reruns stay
byte-identical.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "save",
    "diagram_figure",
    "dispersion_figure",
    "fields_figure",
    "profile_figure",
    "scan_figure",
]


def save(fig, path, dpi=150):
    from pathlib import Path

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return Path(path)


def profile_figure(x, profiles):
    """1D biomass/toxicity profiles; ``profiles`` is a list of
    ``(label, R, T)`` triples sharing the grid ``x``."""
    import matplotlib.pyplot as plt

    fig, (ax_r, ax_t) = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
    for label, R, T in profiles:
        ax_r.plot(x, R, label=label)
        ax_t.plot(x, T, label=label)
    ax_r.set_xlabel("x (m)")
    ax_r.set_ylabel("biomass R (kg/m$^2$)")
    ax_t.set_xlabel("x (m)")
    ax_t.set_ylabel("toxicity T (g/m$^2$)")
    if len(profiles) > 1:
        ax_r.legend(fontsize=8)
    fig.tight_layout()
    return fig


def fields_figure(R, T, L):
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.8))
    for ax, field, name in zip(axes, (R, T), ("R", "T")):
        im = ax.imshow(field, origin="lower", extent=[0, L, 0, L],
                       interpolation="nearest")
        ax.set_title(name)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    return fig


def dispersion_figure(dispersion):
    import matplotlib.pyplot as plt

    lam = np.array([m.lambda_kappa for m in dispersion.modes])
    re = np.array([m.growth[0].real for m in dispersion.modes])
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(lam, re, "o-", ms=3)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel(r"Laplacian eigenvalue $\lambda_\kappa$ (1/m$^2$)")
    ax.set_ylabel("leading growth rate (1/year)")
    fig.tight_layout()
    return fig


def scan_figure(scan):
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.8, 4.2))
    masked = np.ma.masked_where(~scan.feasible, scan.sigma_L)
    mesh = ax.pcolormesh(scan.ss, scan.gammas, masked, shading="auto")
    fig.colorbar(mesh, ax=ax, label=r"$\sigma$ threshold (m$^2$/year)")
    ax.set_xlabel("extra mortality s (1/year)")
    ax.set_ylabel(r"growth reduction $\gamma$ (1/year)")
    ax.set_title(f"pattern onset threshold (ceiling {scan.ceiling:g})")
    fig.tight_layout()
    return fig


def diagram_figure(branches, x_scale=1.0, xlabel="parameter"):
    """Bifurcation diagram: thick segments stable, thin unstable, dots at
    folds and branch points."""
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for bi, branch in enumerate(branches):
        color = colors[bi % len(colors)]
        p = branch.params * x_scale
        y = branch.l1_norms
        stab = branch.stability == 0
        # split into runs of constant stability so line width can encode it
        start = 0
        for i in range(1, len(p) + 1):
            if i == len(p) or stab[i] != stab[start]:
                seg = slice(max(start - 1, 0), i)
                ax.plot(p[seg], y[seg], color=color,
                        lw=2.2 if stab[start] else 0.8)
                start = i
        for sp in branch.special_points:
            idx = int(np.argmin(np.abs(branch.params - sp.param)))
            ax.plot([sp.param * x_scale], [branch.l1_norms[idx]],
                    "o", color=color, ms=5, mec="k", mew=0.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$\Vert R \Vert_{L^1}$ (kg/m)")
    fig.tight_layout()
    return fig
