"""Optional SVG charts: K sweep curves, cluster mean profiles, cluster sizes.

The numeric CSV/JSON artifacts are authoritative; these are for reading.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "meltline"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    fig.clf()


def plot_k_sweep(report, path) -> Path:
    plt = _plt()
    ok = [e for e in report.entries if e.error is None]
    ks = [e.k for e in ok]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    for ax, attr in zip(axes, ("inertia", "distortion", "silhouette")):
        ax.plot(ks, [getattr(e, attr) for e in ok], marker="o")
        ax.set_xlabel("number of clusters")
        ax.set_title(attr)
        if attr == "silhouette" and report.suggested_k is not None:
            ax.axvline(report.suggested_k, color="grey", ls="--")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return Path(path)


def plot_cluster_profiles(centroids: np.ndarray, sizes: dict, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = np.linspace(0.0, 1.0, centroids.shape[1])
    for c, row in enumerate(centroids):
        ax.plot(x, row, label=f"cluster {c} (n={sizes.get(c, 0)})")
    ax.set_xlabel("normalized melt time")
    ax.set_ylabel("temperature [°C]")
    ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return Path(path)


def plot_cluster_sizes(sizes: dict, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = sorted(sizes)
    ax.bar([str(k) for k in keys], [sizes[k] for k in keys])
    ax.set_xlabel("cluster")
    ax.set_ylabel("melts")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return Path(path)
