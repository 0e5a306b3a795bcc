"""CSV and JSON artifact emission with lossless numeric round-trips.

Numbers are written in the shortest decimal form that round-trips to the
same double (Python's repr), with "." as the decimal point regardless of
locale.  All writes go through a temp file renamed into place, so readers
never observe partial artifacts.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .analysis import GapSeries
from .model import Trajectory

__all__ = [
    "fmt",
    "atomic_write_text",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_gaps_csv",
    "write_sweep_csv",
    "write_json",
]


def fmt(x) -> str:
    """Shortest round-trip decimal representation of a float."""
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def write_trajectory_csv(path: str | Path, traj: Trajectory) -> None:
    """Columns: t, V_1..V_n, R_1..R_n[, rho]."""
    n = traj.n
    header = ["t"]
    header += [f"V_{i + 1}" for i in range(n)]
    header += [f"R_{i + 1}" for i in range(n)]
    if traj.has_rho:
        header.append("rho")
    lines = [",".join(header)]
    for i in range(traj.times.size):
        row = [fmt(traj.times[i])] + [fmt(v) for v in traj.states[i]]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Parse a trajectory CSV back to (times, states, n, has_rho)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    has_rho = header[-1] == "rho"
    n_cols = len(header)
    n = (n_cols - 1 - (1 if has_rho else 0)) // 2
    times = np.empty(len(lines) - 1)
    states = np.empty((len(lines) - 1, n_cols - 1))
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        times[i] = float(cells[0])
        for j in range(1, n_cols):
            states[i, j - 1] = float(cells[j])
    return times, states, n, has_rho


def write_gaps_csv(path: str | Path, gaps: GapSeries) -> None:
    """Columns: t, max_gap_sq, gap_sq_i_j per pair (1-based labels)."""
    header = ["t", "max_gap_sq"]
    header += [f"gap_sq_{i + 1}_{j + 1}" for i, j in gaps.pairs]
    lines = [",".join(header)]
    for k in range(gaps.times.size):
        row = [fmt(gaps.times[k]), fmt(gaps.max_gap[k])]
        row += [fmt(v) for v in gaps.gap_sq[k]]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_sweep_csv(path: str | Path, rows: list[dict]) -> None:
    """Sweep summary: value, replicate, final_max_gap_sq, sync_bool.

    Timings are reported in a sidecar file (see runner) so fixed-seed
    reruns stay byte-identical.
    """
    lines = ["value,replicate,final_max_gap_sq,sync_bool"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    fmt(row["value"]),
                    str(row["replicate"]),
                    fmt(row["final_max_gap_sq"]),
                    "true" if row["sync_bool"] else "false",
                ]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_timing_csv(path: str | Path, rows: list[dict]) -> None:
    lines = ["value,replicate,wall_time_ms"]
    for row in rows:
        lines.append(
            ",".join([fmt(row["value"]), str(row["replicate"]), fmt(row["wall_time_ms"])])
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str | Path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
