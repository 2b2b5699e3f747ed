"""CSV and JSON emission with byte-stable formatting."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    # repr gives the shortest string that round-trips the double
    return repr(float(x))


def write_csv(path, header, columns):
    """Write equal-length ``columns`` under ``header`` with '\\n' line ends."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c).tolist() if isinstance(c, np.ndarray) else list(c) for c in columns]
    if len(cols) != len(header) or len({len(c) for c in cols}) > 1:
        raise ValueError("header and columns disagree")
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in zip(*cols))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


def write_sidecar(csv_path, config_dict, extra=None):
    """``<name>.json`` next to ``<name>.csv`` holding the resolved config."""
    doc = {"config": config_dict}
    if extra:
        doc.update(extra)
    return write_json(Path(csv_path).with_suffix(".json"), doc)


def read_csv(path):
    """Header and float columns of a file written by :func:`write_csv`."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def trajectory_csv(path, traj, stride=1):
    """Export ``t,v_c1,v_c2,i_l``."""
    s = slice(None, None, stride)
    return write_csv(path, ["t", "v_c1", "v_c2", "i_l"],
                     [traj.times[s], traj.v_c1[s], traj.v_c2[s], traj.i_l[s]])


def spectrum_csv(path, spectrum):
    return write_csv(path, ["omega_rad_s", "S"], [spectrum.omega, spectrum.density])


def signal_csv(path, trace):
    return write_csv(path, ["t", "delta"], [trace.times, trace.values])
