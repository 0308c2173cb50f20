"""Settling-time bounds of the default gains and how T3 moves with c1 = c2."""

from dataclasses import replace

from _common import emit, load, parser

from flexlink.controller import settling_bound_controller


def main():
    p = parser(__doc__)
    p.add_argument("--c", type=float, nargs="+", default=[1.0, 2.0, 5.0, 15.0, 50.0])
    args = p.parse_args()
    loaded = load(args.scenario)
    g = loaded.scenario.controller
    rows = []
    for c in args.c:
        cb = settling_bound_controller(replace(g, c1=c, c2=c))
        rows.append({"c1=c2": c, "T0": cb.stages[0], "T1": cb.stages[1], "T2": cb.stages[2],
                     "T3": cb.stages[3], "T3_raw": cb.T3_raw, "T_ctrl": cb.T_ctrl,
                     "T_total": cb.T_ctrl + loaded.T_ftsmo})
    print(f"T_FTSMO = {loaded.T_ftsmo:.6g} s (observer gains fixed)")
    emit(rows, ["c1=c2", "T0", "T1", "T2", "T3", "T3_raw", "T_ctrl", "T_total"], args.csv)


if __name__ == "__main__":
    main()
