"""Figure rendering for finished runs.

Renders the audit timeline, the final density profiles and one space-time
heatmap per edge into PNG files next to the delimited output. Uses the Agg
backend and pinned metadata so repeated runs write identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .engine import ResultArchive  # noqa: E402
from .network import Network  # noqa: E402

_SAVE = {"dpi": 110, "metadata": {"Software": "hybridflow"}}


def _cell_centers(network: Network, eid: str, n: int) -> np.ndarray:
    dx = network.edges[eid].dx
    return (np.arange(1, n - 1) - 0.5) * dx


def render_audit_timeline(archive: ResultArchive, path: Path) -> Path:
    times = [rec.time for rec in archive.audits]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    top.plot(times, [rec.total_persons for rec in archive.audits],
             label="in network", color="tab:blue")
    top.plot(times, [rec.injected for rec in archive.audits],
             label="injected", color="tab:green", linestyle="--")
    top.plot(times, [rec.exited for rec in archive.audits],
             label="exited", color="tab:orange", linestyle=":")
    top.set_ylabel("persons")
    top.legend(loc="best")
    top.set_title("people accounting")

    drift = np.maximum([rec.drift for rec in archive.audits], 1e-18)
    bottom.semilogy(times, drift, color="tab:red")
    bottom.set_xlabel("time [s]")
    bottom.set_ylabel("relative drift")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def render_final_profiles(archive: ResultArchive, network: Network,
                          path: Path) -> Path:
    _, time, dens = archive.snapshots[-1]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for eid in archive.edge_ids:
        grid = dens[eid]
        total = grid.sum(axis=0)[1:-1]
        ax.plot(_cell_centers(network, eid, grid.shape[1]), total, label=eid)
    ax.set_xlabel("position along edge [m]")
    ax.set_ylabel("total density")
    ax.set_title(f"final density profiles (t = {time:g} s)")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def render_edge_heatmap(archive: ResultArchive, network: Network, eid: str,
                        path: Path) -> Path:
    rows = [dens[eid].sum(axis=0)[1:-1] for _, _, dens in archive.snapshots]
    times = [time for _, time, _ in archive.snapshots]
    data = np.asarray(rows)
    length = network.edges[eid].length
    fig, ax = plt.subplots(figsize=(8, 4.5))
    image = ax.imshow(data, aspect="auto", origin="lower", cmap="viridis",
                      extent=(0.0, length, times[0], times[-1] or archive.dt))
    fig.colorbar(image, ax=ax, label="total density")
    ax.set_xlabel("position along edge [m]")
    ax.set_ylabel("time [s]")
    ax.set_title(f"edge {eid}")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def render_figures(archive: ResultArchive, network: Network,
                   out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        render_audit_timeline(archive, out / "audit_timeline.png"),
        render_final_profiles(archive, network, out / "final_profiles.png"),
    ]
    for eid in archive.edge_ids:
        written.append(
            render_edge_heatmap(archive, network, eid, out / f"heatmap_{eid}.png"))
    return written
