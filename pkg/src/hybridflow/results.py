"""Delimited output for finished runs.

Three files per run: densities.csv (one row per recorded cell), audit.csv
(one row per step) and summary.txt (key: value lines). All numbers are
written with repr-exact precision and a fixed column order so the same run
produces byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .engine import ResultArchive


def fmt(value) -> str:
    """Repr-exact text for a number; floats use 17 significant digits."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def write_densities_csv(archive: ResultArchive, path: str | Path) -> Path:
    """One row per (snapshot, edge, interior cell).

    Class columns are padded to the widest class count in the run; edges
    with fewer classes leave the extra columns empty.
    """
    path = Path(path)
    k = archive.class_count
    header = ["step", "time_s", "edge_id", "cell_index", "total_density"]
    header += [f"class_{j:02d}" for j in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for step, time, dens in archive.snapshots:
            for eid in archive.edge_ids:
                grid = dens[eid]
                n = grid.shape[1]
                for cell in range(1, n - 1):
                    col = grid[:, cell]
                    row = [str(step), fmt(time), eid, str(cell), fmt(col.sum())]
                    row += [fmt(v) for v in col]
                    row += [""] * (k - grid.shape[0])
                    writer.writerow(row)
    return path


def write_audit_csv(archive: ResultArchive, path: str | Path) -> Path:
    path = Path(path)
    edge_ids = archive.edge_ids
    node_ids = sorted(archive.audits[0].by_node) if archive.audits else []
    header = ["step", "time_s", "total_persons", "injected", "exited",
              "drift", "clamp_slack"]
    header += [f"edge_{eid}" for eid in edge_ids]
    header += [f"node_{nid}" for nid in node_ids]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rec in archive.audits:
            row = [str(rec.step), fmt(rec.time), fmt(rec.total_persons),
                   fmt(rec.injected), fmt(rec.exited), fmt(rec.drift),
                   fmt(rec.clamp_slack)]
            row += [fmt(rec.by_edge[eid]) for eid in edge_ids]
            row += [fmt(rec.by_node[nid]) for nid in node_ids]
            writer.writerow(row)
    return path


def write_summary(archive: ResultArchive, path: str | Path, name: str = "") -> Path:
    path = Path(path)
    last = archive.audits[-1] if archive.audits else None
    pairs: list[tuple[str, str]] = [
        ("name", name or "unnamed"),
        ("termination", archive.termination),
        ("steps_run", str(archive.steps_run)),
        ("dt_s", fmt(archive.dt)),
        ("edges", str(len(archive.edge_ids))),
        ("snapshots", str(len(archive.snapshots))),
        ("injected_persons", fmt(archive.injected_persons)),
        ("exited_persons", fmt(archive.exited_persons)),
        ("final_total_persons", fmt(last.total_persons) if last else "none"),
        ("final_drift", fmt(last.drift) if last else "none"),
        ("clamp_slack", fmt(last.clamp_slack) if last else "none"),
        ("jam_events", str(len(archive.jam_events))),
        ("route_blocked_events", str(len(archive.route_events))),
        ("exit_events", str(len(archive.exit_events))),
    ]
    for key, value in (("mean_entry_time_s", archive.mean_entry_time()),
                       ("mean_exit_time_s", archive.mean_exit_time()),
                       ("mean_travel_time_s", archive.mean_travel_time())):
        pairs.append((key, "none" if value is None else fmt(value)))
    with open(path, "w", newline="\n") as fh:
        for key, value in pairs:
            fh.write(f"{key}: {value}\n")
    return path


def write_outputs(archive: ResultArchive, out_dir: str | Path,
                  name: str = "") -> dict[str, Path]:
    """Write all three delimited files into out_dir (created if missing)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return {
        "densities": write_densities_csv(archive, out / "densities.csv"),
        "audit": write_audit_csv(archive, out / "audit.csv"),
        "summary": write_summary(archive, out / "summary.txt", name=name),
    }
