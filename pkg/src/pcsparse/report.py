"""Figure rendering for sparsification runs.

Writes a small set of diagnostic plots next to the delimited output:
the energy decrease over outer iterations, the growth of the partition,
and a before/after view of the cloud.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_report"]


def render_report(outdir, input_points, output_points, trace=None, title=""):
    """Render run figures into ``outdir``; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    if trace is not None and len(trace.energies) > 1:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
        its = np.arange(len(trace.energies))
        ax1.plot(its, trace.energies, marker="o", ms=3)
        ax1.set_xlabel("outer iteration")
        ax1.set_ylabel("energy")
        ax1.set_title("energy decrease")
        if min(trace.energies) > 0:
            ax1.set_yscale("log")
        ax2.plot(np.arange(len(trace.n_subsets)), trace.n_subsets, marker="s", ms=3)
        ax2.set_xlabel("outer iteration")
        ax2.set_ylabel("subsets")
        ax2.set_title("partition growth")
        fig.suptitle(title)
        fig.tight_layout()
        path = os.path.join(outdir, "convergence.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
    for ax, pts, label in (
        (axes[0], np.atleast_2d(input_points), f"input ({len(input_points)})"),
        (axes[1], np.atleast_2d(output_points), f"output ({len(output_points)})"),
    ):
        if pts.shape[1] == 1:
            ax.scatter(pts[:, 0], np.zeros(pts.shape[0]), s=2)
        else:
            ax.scatter(pts[:, 0], pts[:, 1], s=2)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(label)
    fig.suptitle(title)
    fig.tight_layout()
    path = os.path.join(outdir, "clouds.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
