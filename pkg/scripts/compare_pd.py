"""Proposed controller against the PD baseline, with and without a disturbance."""

from dataclasses import replace

from _common import emit, load, parser

from flexlink.metrics import compute_metrics
from flexlink.sim import DisturbanceSpec, run_scenario


def main():
    p = parser(__doc__)
    p.add_argument("--amplitude", type=float, default=0.3)
    args = p.parse_args()
    loaded = load(args.scenario)
    sc = loaded.scenario
    rows = []
    for dist in (DisturbanceSpec(), DisturbanceSpec("sine", args.amplitude, 2.0),
                 DisturbanceSpec("step", args.amplitude, step_time=4.0)):
        for kind in ("proposed", "pd"):
            cfg = replace(sc.sim, controller=kind, disturbance=dist)
            m = compute_metrics(run_scenario(cfg, loaded.systems, sc.controller, loaded.observer))
            rows.append({"controller": kind, "disturbance": dist.kind,
                         "tip_settling": m.settling_time_tip, "overshoot_pct": m.overshoot_pct,
                         "steady_rms": m.steady_state_norm_tip, "ISE": m.tip.ISE,
                         "IAE": m.tip.IAE, "ITSE": m.tip.ITSE, "ITAE": m.tip.ITAE})
    emit(rows, ["controller", "disturbance", "tip_settling", "overshoot_pct", "steady_rms",
                "ISE", "IAE", "ITSE", "ITAE"], args.csv)


if __name__ == "__main__":
    main()
