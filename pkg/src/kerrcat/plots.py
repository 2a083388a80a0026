"""Figure rendering.  All figures are written as deterministic SVG.

Matplotlib salts SVG element ids with the figure object id and stamps a
creation date unless told otherwise; both are pinned here so that repeated
runs of the same configuration produce byte-identical files.
"""

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

_SVG_META = {"Date": None, "Creator": None}

_SERIES = (
    ("dE_floquet_over_K", "Floquet", "o", "C0"),
    ("dE_effective_over_K", "effective", "s", "C1"),
)
_CAT_SERIES = (
    ("dE_fgr_over_K", "golden rule", "^", "C2"),
    ("dE_semiclassical_over_K", "semiclassical", "--", "C3"),
)


def _new_figure(figsize):
    plt.rcParams["svg.hashsalt"] = "kerrcat"
    return plt.figure(figsize=figsize)

def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _col(rows, name):
    return np.array([float(r.get(name, np.nan)) for r in rows])


def plot_curve(path, floquet_rows, cat_rows=()):
    """Tunneling splitting vs K, log-log, with model overlays when present."""
    fig = _new_figure((6.0, 4.2))
    ax = fig.add_subplot(111)
    ks = _col(floquet_rows, "K")
    for key, label, marker, color in _SERIES:
        y = _col(floquet_rows, key)
        good = np.isfinite(y) & (y > 0)
        if good.any():
            ax.plot(ks[good], y[good], marker, ms=4, color=color,
                    label=label, lw=1.0, ls="-")
    if cat_rows:
        kc = _col(cat_rows, "K")
        for key, label, marker, color in _CAT_SERIES:
            y = _col(cat_rows, key)
            good = np.isfinite(y) & (y > 0)
            if not good.any():
                continue
            if marker == "--":
                ax.plot(kc[good], y[good], ls="--", color=color, label=label)
            else:
                ax.plot(kc[good], y[good], marker, ms=4, color=color,
                        label=label, ls="none")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("K")
    ax.set_ylabel(r"$\Delta E / K$")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    _save(fig, path)


def plot_localization(path, rows, title_k=None):
    """IPN and Wehrl entropy per tracked state, Floquet vs effective."""
    fig = _new_figure((7.0, 3.4))
    tracked = [r for r in rows if float(r.get("index", -1)) >= 0]
    idx = _col(tracked, "index")
    panels = (("ipn_eff", "ipn_floquet", "IPN", True),
              ("wehrl_eff", "wehrl_floquet", "Wehrl entropy", False))
    for i, (keff, kfl, label, logy) in enumerate(panels):
        ax = fig.add_subplot(1, 2, i + 1)
        ye, yf = _col(tracked, keff), _col(tracked, kfl)
        ax.plot(idx[np.isfinite(ye)], ye[np.isfinite(ye)], "s", ms=3,
                color="C1", label="effective")
        ax.plot(idx[np.isfinite(yf)], yf[np.isfinite(yf)], "o", ms=3,
                color="C0", label="Floquet")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("state index")
        ax.set_ylabel(label)
        ax.legend(fontsize=7)
    if title_k is not None:
        fig.suptitle(f"K = {title_k:g}", fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def plot_section(path, section, boundary=None):
    """Stroboscopic section scatter in rotated coordinates."""
    fig = _new_figure((5.2, 5.0))
    ax = fig.add_subplot(111)
    n_seeds = len(section.points)
    for s, xy in enumerate(section.points):
        xy = np.asarray(xy)
        good = np.isfinite(xy[:, 0])
        ax.plot(xy[good, 0], xy[good, 1], ".", ms=0.8,
                color=plt.get_cmap("viridis")(s / max(n_seeds - 1, 1)),
                rasterized=False)
    if boundary is not None and len(boundary):
        b = np.asarray(boundary)
        ax.plot(b[:, 0], b[:, 1], "-", color="k", lw=0.8)
    ax.set_xlabel("x'")
    ax.set_ylabel("p'")
    ax.set_aspect("equal")
    fig.tight_layout()
    _save(fig, path)


def plot_husimi(path, grids, labels):
    """One panel per Husimi distribution, shared color scale."""
    n = len(grids)
    fig = _new_figure((4.2 * n, 3.8))
    vmax = max(float(g.q.max()) for g in grids)
    for i, (hg, label) in enumerate(zip(grids, labels)):
        ax = fig.add_subplot(1, n, i + 1)
        m = ax.pcolormesh(hg.xs, hg.ps, hg.q, cmap="magma", vmin=0.0,
                          vmax=vmax, shading="nearest")
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        ax.set_aspect("equal")
        fig.colorbar(m, ax=ax, shrink=0.85)
    fig.tight_layout()
    _save(fig, path)
