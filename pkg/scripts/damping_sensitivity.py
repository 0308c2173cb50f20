"""Closed-loop metrics against the structural damping ratio of the beam."""

from dataclasses import replace

from _common import emit, parser

from flexlink.config import load_scenario, prepare
from flexlink.metrics import compute_metrics
from flexlink.sim import SimulationDiverged, run_scenario


def main():
    p = parser(__doc__)
    p.add_argument("--zetas", type=float, nargs="+", default=[0.0, 0.005, 0.01, 0.02, 0.05])
    args = p.parse_args()
    base = load_scenario(args.scenario)
    rows = []
    for zeta in args.zetas:
        loaded = prepare(replace(base, beam=replace(base.beam, damping_ratio=zeta)))
        sc = loaded.scenario
        try:
            tr = run_scenario(sc.sim, loaded.systems, sc.controller, loaded.observer)
        except SimulationDiverged as exc:
            rows.append({"zeta": zeta, "status": f"diverged at {exc.t:.3g} s"})
            continue
        m = compute_metrics(tr)
        rows.append({"zeta": zeta, "status": "ok", "T_FTSMO": loaded.T_ftsmo,
                     "tip_settling": m.settling_time_tip, "joint_settling": m.settling_time_joint,
                     "overshoot_pct": m.overshoot_pct, "steady_rms": m.steady_state_norm_tip})
    emit(rows, ["zeta", "status", "T_FTSMO", "tip_settling", "joint_settling", "overshoot_pct",
                "steady_rms"], args.csv)


if __name__ == "__main__":
    main()
