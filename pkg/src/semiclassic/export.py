"""CSV and JSON writers for trajectories, scans, reductions and wavepackets.

CSV floats are printed with 17 significant digits (exact for doubles);
JSON floats use Python's shortest round-trip representation.
"""

import csv
import json
from pathlib import Path

import numpy as np

__all__ = [
    "format_float",
    "to_jsonable",
    "write_csv",
    "write_json",
    "trajectory_rows",
    "write_trajectory_csv",
    "write_variational_json",
    "write_focal_scan",
    "write_gauge_csv",
    "write_wavepacket",
]


def format_float(v):
    return format(float(v), ".17g")


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v
                        for v in row])
    return path


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n",
                    encoding="utf-8")
    return path


def trajectory_rows(traj, taus=None):
    """Rows (tau, x_1..x_n, y_1..y_n, S_partial); integrator steps by default."""
    taus = traj.times if taus is None else np.asarray(taus, dtype=float)
    for tau in taus:
        z = traj.z(tau)
        yield [float(tau), *map(float, z), float(traj.running_action(tau))]


def write_trajectory_csv(traj, path, taus=None):
    n = traj.n
    header = (["tau"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
              + ["S_partial"])
    return write_csv(path, header, trajectory_rows(traj, taus))


def write_variational_json(phi, path):
    return write_json(path, phi.as_dict())


def write_focal_scan(report, csv_path, json_path=None, extra=None):
    write_csv(csv_path, ["tau", "detJ"],
              ([float(t), float(d)] for t, d in zip(report.grid, report.detJ_values)))
    if json_path is not None:
        summary = report.summary()
        summary.update(extra or {})
        write_json(json_path, summary)
    return Path(csv_path)


def write_gauge_csv(reduction, path):
    header = (["tau", "P00", "P01", "P10", "P11", "PA00", "PA01", "PA10", "PA11", "quad"])
    return write_csv(path, header, ([float(v) for v in row] for row in reduction.rows()))


def write_wavepacket(grid, path, meta_path=None, meta=None):
    """Columns x, re, im, abs2; optional JSON metadata (t plus ``meta``)."""
    v = grid.values
    rows = zip(grid.x, v.real, v.imag, np.abs(v) ** 2)
    write_csv(path, ["x", "re", "im", "abs2"], ([float(c) for c in r] for r in rows))
    if meta_path is not None:
        write_json(meta_path, {"t": grid.t, "n_points": grid.n_points, "x_min": grid.x_min,
                               "x_max": grid.x_max, **(meta or {})})
    return Path(path)
