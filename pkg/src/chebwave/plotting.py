"""Figures written next to the CSV tables: rate-distortion curves and subband mosaics."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 120,
}

# fixed metadata keeps repeated runs byte-identical
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_rate_distortion(tables: dict, path, title: str = ""):
    """PSNR against BPP and MSE against iteration for one or more labelled tables."""
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
        for label, rows in tables.items():
            it = [r.iteration for r in rows]
            ax1.plot([r.bpp for r in rows], [r.psnr for r in rows], marker="o", ms=3, label=label)
            ax2.semilogy(it, [max(r.mse, 1e-12) for r in rows], marker="o", ms=3, label=label)
        ax1.set_xlabel("BPP")
        ax1.set_ylabel("PSNR (dB)")
        ax2.set_xlabel("iteration")
        ax2.set_ylabel("MSE")
        ax1.legend()
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def _stretch(band: np.ndarray) -> np.ndarray:
    a = np.abs(band)
    top = a.max()
    return a / top if top > 0 else a


def plot_subbands(ll, lh, hl, hh, path, title: str = ""):
    """2x2 mosaic of one decomposition level (detail magnitudes are stretched)."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(5, 5))
        panels = [("LL", ll), ("HL", hl), ("LH", lh), ("HH", hh)]
        for ax, (name, band) in zip(axes.ravel(), panels):
            ax.imshow(_stretch(np.asarray(band)), cmap="gray", vmin=0, vmax=1, interpolation="nearest")
            ax.set_title(name)
            ax.axis("off")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_layout(layout, path, title: str = ""):
    """Whole pyramid in nested-quadrant layout, log-scaled magnitudes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.imshow(np.log1p(np.abs(layout)), cmap="magma", interpolation="nearest")
        ax.axis("off")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
