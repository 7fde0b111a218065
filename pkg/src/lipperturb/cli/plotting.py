"""Figure rendering for reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _frontier(ax, desc):
    F = np.asarray(desc["frontier"], dtype=float).reshape(-1, 2)
    ax.plot(F[:, 0], F[:, 1], "o-", label="frontier vertices")
    ax.plot(*desc["chosen"], "r*", ms=12, label="chosen")
    ax.set_xlabel("lambda1")
    ax.set_ylabel("lambda2")
    ax.legend()


def _guo(ax, desc):
    v = np.array([np.nan if x is None else x for x in desc["values"]], dtype=float)
    ax.plot(desc["eps"], v, ".-")
    ax.set_xlabel("eps")
    ax.set_ylabel("upper bound on Lip(T^-1)")


def _residuals(ax, desc):
    h = np.asarray(desc["history"], dtype=float)
    h = np.where(h > 0, h, np.nan)
    ax.semilogy(np.arange(h.size), h, ".-", label="residual")
    if desc.get("q") and 0 < desc["q"] < 1 and h.size and np.isfinite(h[0]):
        ax.semilogy(np.arange(h.size), h[0] * desc["q"] ** np.arange(h.size), "--",
                    label="q^k envelope")
    ax.set_xlabel("iteration")
    ax.legend()


def _resolvent(ax, desc):
    ax.plot(desc["alpha"], desc["sample"], ".-", label="sampled lower ratio")
    ex = [np.nan if v is None else v for v in desc["exact"]]
    if not np.all(np.isnan(ex)):
        ax.plot(desc["alpha"], ex, "x", label="exact min singular value")
    ax.axvline(desc["threshold"], color="r", ls="--", label="guaranteed threshold")
    ax.set_xlabel("alpha")
    ax.legend()


def _bounds(ax, desc):
    labels = ["original", "claimed", "empirical"]
    for k, key in enumerate(labels):
        lo, hi = desc[key]
        ax.plot([lo, hi], [k, k], "o-", lw=3)
    ax.set_yticks(range(3))
    ax.set_yticklabels(labels)
    ax.set_xlabel("bound value")


def _matrix(ax, desc):
    M = np.asarray(desc["matrix"], dtype=float)
    im = ax.imshow(M, cmap="coolwarm")
    ax.figure.colorbar(im, ax=ax)
    ax.set_title(desc.get("title", ""))


_KINDS = {"frontier": _frontier, "guo": _guo, "residuals": _residuals,
          "resolvent": _resolvent, "bounds": _bounds, "matrix": _matrix}


def render(desc: dict, out_dir: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    try:
        _KINDS[desc["kind"]](ax, desc)
        fig.tight_layout()
        path = Path(out_dir) / desc["file"]
        fig.savefig(path, dpi=80)
    finally:
        plt.close(fig)
    return path
