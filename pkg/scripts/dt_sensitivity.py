"""Metrics of the default run as the integration step grows."""

from dataclasses import replace

from _common import emit, load, parser

from flexlink.metrics import compute_metrics
from flexlink.sim import SimulationDiverged, run_scenario


def main():
    p = parser(__doc__)
    p.add_argument("--dts", type=float, nargs="+", default=[5e-5, 1e-4, 2e-4, 5e-4, 1e-3, 5e-3, 2e-2, 4e-2])
    args = p.parse_args()
    loaded = load(args.scenario)
    sc = loaded.scenario
    rows = []
    for dt in args.dts:
        try:
            tr = run_scenario(replace(sc.sim, dt=dt), loaded.systems, sc.controller, loaded.observer)
        except SimulationDiverged as exc:
            rows.append({"dt": dt, "status": f"diverged at {exc.t:.3g} s"})
            continue
        m = compute_metrics(tr)
        rows.append({"dt": dt, "status": "ok", "tip_settling": m.settling_time_tip,
                     "final_error": float(abs(tr.theta_t[-1] - tr.theta_d)),
                     "steady_rms": m.steady_state_norm_tip, "saturated_steps": tr.saturation_steps})
    emit(rows, ["dt", "status", "tip_settling", "final_error", "steady_rms", "saturated_steps"], args.csv)


if __name__ == "__main__":
    main()
