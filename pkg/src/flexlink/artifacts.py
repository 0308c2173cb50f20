"""Run artifacts: trace CSV, JSON summaries and a gnuplot script.

The CSV header is fixed (``TRACE_COLUMNS``).  Plant-state columns cover two
flexible modes; with a one-mode truth plant the second-mode columns hold
``nan``.  Floats are written with 17 significant digits so a trace read back
reproduces the binary values exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

TRACE_COLUMNS = (
    "t", "theta_t", "theta_c", "theta_d", "u_cmd", "u", "xi",
    "s0", "s1", "s2", "s3",
    "z1", "z2", "z3", "z4",
    "zhat1", "zhat2", "zhat3", "zhat4",
    "ey_tip", "ey_joint",
    "theta", "theta_dot", "p1", "p1_dot", "p2", "p2_dot",
)


def trace_matrix(trace) -> np.ndarray:
    n = len(trace)
    psi = np.full((n, 6), np.nan)
    psi[:, :trace.psi.shape[1]] = trace.psi
    cols = [trace.t[:, None], trace.theta_t[:, None], trace.theta_c[:, None],
            np.full((n, 1), trace.theta_d), trace.u_cmd[:, None], trace.u[:, None],
            trace.xi[:, None], trace.s, trace.z, trace.z_hat, trace.e_y, psi]
    M = np.hstack(cols)
    assert M.shape[1] == len(TRACE_COLUMNS)
    return M


def write_trace_csv(trace, path) -> Path:
    path = Path(path)
    np.savetxt(path, trace_matrix(trace), fmt="%.17g", delimiter=",",
               header=",".join(TRACE_COLUMNS), comments="")
    return path


def read_trace_csv(path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(TRACE_COLUMNS)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


PLOT_TEMPLATE = """\
# gnuplot script; run `gnuplot {script}` next to {csv}
# scenario hash {scenario_hash}
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1200,1400
set output "{png}"
set multiplot layout 4,2 title "{title}"
set xlabel "t (s)"

set ylabel "angle (rad)"
plot "{csv}" using "t":"theta_t" with lines title "tip", \\
     "" using "t":"theta_c" with lines title "joint", \\
     "" using "t":"theta_d" with lines dt 2 title "set-point"

set ylabel "u (N m)"
plot "{csv}" using "t":"u" with lines title "applied", \\
     "" using "t":"u_cmd" with lines dt 2 title "commanded"

set ylabel "surfaces"
plot "{csv}" using "t":"s0" with lines, "" using "t":"s1" with lines, \\
     "" using "t":"s2" with lines, "" using "t":"s3" with lines

set ylabel "output estimation error (rad)"
plot "{csv}" using "t":"ey_tip" with lines, "" using "t":"ey_joint" with lines

set ylabel "z1, z2"
plot "{csv}" using "t":"z1" with lines, "" using "t":"zhat1" with lines dt 2, \\
     "" using "t":"z2" with lines, "" using "t":"zhat2" with lines dt 2

set ylabel "z3, z4"
plot "{csv}" using "t":"z3" with lines, "" using "t":"zhat3" with lines dt 2, \\
     "" using "t":"z4" with lines, "" using "t":"zhat4" with lines dt 2

set ylabel "modal coordinates"
plot "{csv}" using "t":"p1" with lines, "" using "t":"p2" with lines

set ylabel "disturbance (N m)"
plot "{csv}" using "t":"xi" with lines

unset multiplot
"""


def write_plot_script(path, csv_name: str, title: str, scenario_hash: str = "") -> Path:
    path = Path(path)
    png = Path(csv_name).with_suffix(".png").name
    path.write_text(PLOT_TEMPLATE.format(script=path.name, csv=csv_name, png=png, title=title,
                                         scenario_hash=scenario_hash or "unknown"))
    return path
