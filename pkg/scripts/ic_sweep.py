"""Tip settling time against the size of the initial offset (plant sweep)."""

from _common import emit, load, parser

from flexlink.sim import sweep_initial_conditions


def main():
    p = parser(__doc__)
    p.add_argument("--scales", type=float, nargs="+", default=[0.1, 1.0, 3.0, 10.0, 30.0, 100.0])
    p.add_argument("--t-end", type=float, default=None)
    args = p.parse_args()
    loaded = load(args.scenario)
    sc = loaded.scenario
    cfg = sc.sim if args.t_end is None else sc.with_sim(t_end=args.t_end).sim
    rep = sweep_initial_conditions(cfg, loaded.systems, sc.controller, loaded.observer,
                                   args.scales, loaded.T_total)
    rows = [{"scale": r.scale, "tip_settling": r.settling_time,
             "joint_settling": r.settling_time_joint, "within_T_total": r.within_bound,
             "diverged": r.diverged} for r in rep.rows]
    print(f"T_total = {rep.bound:.6g} s")
    emit(rows, ["scale", "tip_settling", "joint_settling", "within_T_total", "diverged"], args.csv)


if __name__ == "__main__":
    main()
