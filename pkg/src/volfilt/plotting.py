"""Static figures (SVG by default) for the CLI report paths."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write  # noqa: E402

STYLE = {
    "figure.figsize": (7.0, 3.6),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "svg.hashsalt": "volfilt",  # stable ids -> reproducible files
}


def _save(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".") or "svg"
    with atomic_write(path, "wb") as fh:
        fig.savefig(fh, format=fmt, bbox_inches="tight", metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)
    return path


def plot_weights(weights, path, title="Volatility filter weights"):
    """Impulse responses, index 0 = newest sample. ``weights`` maps label -> vector."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, w in weights.items():
            ax.plot(np.arange(len(w)), w, label=label)
        ax.set_xlabel("sample age")
        ax.set_ylabel("weight")
        ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_detection_trace(x, sf, ss, lam, path, events=(), truths=(), gamma=None):
    """Signal, fast/slow volatility and the adaptive weight on a shared time axis."""
    t = np.arange(len(x))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7.0, 6.0))
        axes[0].plot(t, x, lw=0.4, color="0.3")
        axes[0].set_ylabel("x")
        axes[1].plot(t, sf, lw=0.7, label="fast")
        axes[1].plot(t, ss, lw=0.9, label="slow")
        axes[1].set_ylabel("volatility")
        axes[1].legend(frameon=False, loc="upper left")
        axes[2].plot(t, lam, lw=0.7, color="C2")
        if gamma is not None:
            axes[2].axhline(gamma, ls="--", lw=0.7, color="k")
        axes[2].set_ylim(-0.05, 1.05)
        axes[2].set_ylabel("weight")
        axes[2].set_xlabel("sample")
        for ax in axes:
            for tau in truths:
                ax.axvline(tau, color="0.6", lw=0.6, ls=":")
            for ev in events:
                ax.axvline(getattr(ev, "detect_time", ev), color="C3", lw=0.6)
        return _save(fig, path)


def plot_sigmaD_trace(sigma_D, path, tau=None, T_l=None):
    """Differenced volatility with the expected peak position marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(np.arange(len(sigma_D)), sigma_D, lw=0.6)
        if tau is not None and T_l is not None:
            ax.axvline(tau + T_l - 1, ls="--", color="k", lw=0.8)
        ax.set_xlabel("sample")
        ax.set_ylabel("differenced volatility")
        return _save(fig, path)


def plot_profile(xs, series, path, xlabel, ylabel, marker_x=None):
    """Line plot of one or more named profiles over a common abscissa."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, ys in series.items():
            ax.plot(xs, ys, marker="o", ms=2.5, lw=0.9, label=label)
        if marker_x is not None:
            ax.axvline(marker_x, ls="--", color="k", lw=0.8)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend(frameon=False)
        return _save(fig, path)
