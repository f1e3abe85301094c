"""Report figures rendered next to the CSV outputs.

Each writer takes the already-computed report data and a target path; PNG
metadata is stripped of dates so repeated runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from patrev.forward import DataSet
from patrev.reversal import ImagingResult


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Date": None})
    plt.close(fig)


def dataset_figure(dataset: DataSet, path: str | Path) -> None:
    """Trace waterfall plus the first sensor's trace."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    t = dataset.times
    extent = (t[0], t[-1], dataset.sensors.count - 0.5, -0.5)
    im = ax0.imshow(dataset.traces, aspect="auto", extent=extent, cmap="RdBu_r")
    ax0.set_ylabel("sensor index")
    fig.colorbar(im, ax=ax0, label="pressure")
    ax1.plot(t, dataset.traces[0], lw=0.9)
    ax1.set_xlabel("time")
    ax1.set_ylabel("pressure at sensor 0")
    ax0.set_title(f"boundary traces ({dataset.model.label}, {dataset.sensors.count} sensors)")
    _save(fig, Path(path))


def profile_figure(result: ImagingResult, reference: np.ndarray | None, path: str | Path) -> None:
    """Reconstructed values along the evaluation points, with the source
    overlaid when known."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    pts = result.points
    spans = pts.max(axis=0) - pts.min(axis=0)
    axis = int(np.argmax(spans))
    if spans[axis] > 0:
        coord = pts[:, axis]
        ax.set_xlabel("xyz"[axis])
    else:
        coord = np.arange(len(pts))
        ax.set_xlabel("point index")
    ax.plot(coord, result.values, "o-", ms=3, lw=1, label="reconstruction")
    if reference is not None:
        ax.plot(coord, reference, "k--", lw=1, label="source")
    title = f"order {result.metadata.get('order')}  rho={result.metadata.get('rho'):g}"
    if result.rel_l2_error is not None:
        title += f"  rel L2 err={result.rel_l2_error:.3g}"
    ax.set_title(title)
    ax.set_ylabel("reconstructed amplitude")
    ax.legend()
    _save(fig, Path(path))


def sweep_figure(rows: Sequence[tuple[float, float]], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    rho = [r for r, _ in rows]
    err = [e for _, e in rows]
    ax.loglog(rho, err, "o-")
    ax.set_xlabel("cutoff rho")
    ax.set_ylabel("relative L2 error")
    ax.set_title("error vs cutoff")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, Path(path))


def identity_figure(
    a_values: Sequence[float],
    residuals: Sequence[float],
    slope: float,
    order: int,
    path: str | Path,
) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.loglog(a_values, residuals, "o-", label=f"order {order}, slope {slope:.2f}")
    ax.set_xlabel("attenuation strength")
    ax.set_ylabel("composition residual")
    ax.set_title("correction-identity residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, Path(path))
