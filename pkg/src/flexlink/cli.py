"""Command-line front end.

    flexlink run|bounds|compare|sweep|validate <scenario.json>
             [--out DIR] [--dt X] [--theory-mode] [--scales a,b,c]

Exit codes: 0 settled / ok, 2 unsettled (or a sweep row over its bound),
3 diverged, 4 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from . import artifacts
from .config import ConfigError, LoadedScenario, load_scenario, prepare, scenario_to_dict
from .metrics import compute_metrics
from .observer import check_time_hierarchy, validate_gains
from .sim import SimulationDiverged, run_scenario, sweep_initial_conditions

EXIT_OK = 0
EXIT_UNSETTLED = 2
EXIT_DIVERGED = 3
EXIT_CONFIG = 4


def _parse_scales(text):
    try:
        scales = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid scale list {text!r}") from None
    if not scales:
        raise argparse.ArgumentTypeError("at least one scale is required")
    return scales


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flexlink", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=("run", "bounds", "compare", "sweep", "validate"))
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides the scenario)")
    p.add_argument("--dt", type=float, default=None, help="integration step in seconds")
    p.add_argument("--theory-mode", action="store_true",
                   help="pure sign functions, no boundary layers, no saturation")
    p.add_argument("--scales", type=_parse_scales, default=[1.0, 10.0, 100.0],
                   help="comma-separated IC scales for `sweep` (default 1,10,100)")
    return p


def _load(args) -> LoadedScenario:
    sc = load_scenario(args.scenario)
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.theory_mode:
        changes["theory_mode"] = True
    if changes:
        try:
            sc = sc.with_sim(**changes)
        except ValueError as exc:
            raise ConfigError("sim", str(exc)) from None
    return prepare(sc)


def _out_dir(args, loaded: LoadedScenario) -> Path:
    out = args.out if args.out is not None else Path(loaded.scenario.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def bounds_dict(loaded: LoadedScenario) -> dict:
    cb = loaded.controller_bounds
    ok, total = check_time_hierarchy(loaded.T_ftsmo, cb.T_ctrl)
    return {"T0": cb.stages[0], "T1": cb.stages[1], "T2": cb.stages[2], "T3": cb.stages[3],
            "T3_raw": cb.T3_raw, "c_eps": cb.c_eps, "T_ctrl": cb.T_ctrl,
            "T_FTSMO": loaded.T_ftsmo, "T_total": total, "hierarchy_ok": ok}


def _simulate(loaded: LoadedScenario, sim):
    """``(trace, None)`` or ``(None, diverged-exception)``."""
    sc = loaded.scenario
    try:
        return run_scenario(sim, loaded.systems, sc.controller, loaded.observer), None
    except SimulationDiverged as exc:
        return None, exc


def _status(report) -> tuple[str, int]:
    if report.settled_tip and report.settled_joint:
        return "settled", EXIT_OK
    return "unsettled", EXIT_UNSETTLED


def cmd_run(args) -> int:
    loaded = _load(args)
    sc = loaded.scenario
    out = _out_dir(args, loaded)
    t0 = time.perf_counter()
    trace, err = _simulate(loaded, sc.sim)
    elapsed = time.perf_counter() - t0
    summary = {"scenario": sc.name, "scenario_hash": sc.hash, "config": scenario_to_dict(sc),
               "bounds": bounds_dict(loaded)}
    if err is not None:
        summary.update(status="diverged", diverged_at=err.t)
        artifacts.write_json(summary, out / "summary.json")
        print(f"diverged at t = {err.t:.6g} s", file=sys.stderr)
        return EXIT_DIVERGED
    report = compute_metrics(trace)
    status, code = _status(report)
    summary.update(status=status, metrics=report.to_dict(),
                   saturation_steps=trace.saturation_steps,
                   boundary_layer_fraction=trace.boundary_layer_fraction,
                   trace_columns=list(artifacts.TRACE_COLUMNS))
    artifacts.write_trace_csv(trace, out / "trace.csv")
    artifacts.write_json(summary, out / "summary.json")
    if sc.output.plot:
        artifacts.write_plot_script(out / "plot.gp", "trace.csv", f"{sc.name} ({sc.hash[:12]})",
                                    sc.hash)
    print(f"{status}: tip settling {report.settling_time_tip:.4g} s, joint "
          f"{report.settling_time_joint:.4g} s, overshoot {report.overshoot_pct:.3g} %, "
          f"steady-state RMS {report.steady_state_norm_tip:.3g} rad  [{elapsed:.2f} s wall]")
    print(f"artifacts in {out}")
    return code


def cmd_bounds(args) -> int:
    loaded = _load(args)
    b = bounds_dict(loaded)
    rows = [("T0", b["T0"]), ("T1", b["T1"]), ("T2", b["T2"]), ("T3", b["T3"]),
            ("T3 (raw c1,c2,p,q form)", b["T3_raw"]), ("T_ctrl", b["T_ctrl"]),
            ("T_FTSMO", b["T_FTSMO"]), ("T_total", b["T_total"])]
    for name, val in rows:
        print(f"{name:<26}{val:12.6g} s")
    print(f"{'hierarchy T_FTSMO < T_ctrl':<26}{'yes' if b['hierarchy_ok'] else 'NO':>12}")
    print(f"scenario hash {loaded.scenario.hash}")
    return EXIT_OK


COMPARE_FIELDS = ("settling_time_tip", "settling_time_joint", "overshoot_pct",
                  "steady_state_norm_tip", "ISE", "IAE", "ITSE", "ITAE")


def cmd_compare(args) -> int:
    loaded = _load(args)
    sc = loaded.scenario
    out = _out_dir(args, loaded)
    rows = {}
    codes = {}
    for label, kind in (("proposed", "proposed"), ("PD", "pd")):
        trace, err = _simulate(loaded, replace(sc.sim, controller=kind))
        if err is not None:
            rows[label] = {"status": "diverged", "diverged_at": err.t}
            codes[label] = EXIT_DIVERGED
            continue
        rep = compute_metrics(trace)
        status, codes[label] = _status(rep)
        d = rep.to_dict()
        rows[label] = {"status": status, **{k: d[k] for k in COMPARE_FIELDS[:4]},
                       **{k: d["tip"][k] for k in COMPARE_FIELDS[4:]}}
    artifacts.write_json({"scenario": sc.name, "scenario_hash": sc.hash, "rows": rows},
                         out / "compare.json")
    header = f"{'controller':<10}" + "".join(f"{k:>22}" for k in COMPARE_FIELDS) + f"{'status':>12}"
    print(header)
    for label, row in rows.items():
        cells = "".join(f"{_fmt(row.get(k)):>22}" for k in COMPARE_FIELDS)
        print(f"{label:<10}{cells}{row['status']:>12}")
    return codes["proposed"]


def _fmt(v):
    if v is None:
        return "-"
    return f"{v:.6g}"


def cmd_sweep(args) -> int:
    loaded = _load(args)
    sc = loaded.scenario
    out = _out_dir(args, loaded)
    rep = sweep_initial_conditions(sc.sim, loaded.systems, sc.controller, loaded.observer,
                                   args.scales, loaded.T_total, target="plant")
    data = {"scenario": sc.name, "scenario_hash": sc.hash, "bound_T_total": rep.bound,
            "rows": [asdict(r) for r in rep.rows], "violations": rep.violations}
    for r in data["rows"]:
        r["note"] = "mirrored initial offset" if r["scale"] < 0 else ""
    artifacts.write_json(data, out / "sweep.json")
    print(f"T_total = {rep.bound:.6g} s")
    print(f"{'scale':>8}{'tip settling (s)':>18}{'joint settling (s)':>20}{'<= T_total':>12}")
    for r in rep.rows:
        flag = "diverged" if r.diverged else ("yes" if r.within_bound else "NO")
        print(f"{r.scale:>8g}{r.settling_time:>18.6g}{r.settling_time_joint:>20.6g}{flag:>12}")
    if any(r.diverged for r in rep.rows):
        return EXIT_DIVERGED
    return EXIT_OK if rep.violations == 0 else EXIT_UNSETTLED


def cmd_validate(args) -> int:
    loaded = _load(args)
    rep = validate_gains(loaded.systems.canonical, loaded.observer)
    for line in rep.lines():
        print(line)
    b = bounds_dict(loaded)
    print(f"T_FTSMO {b['T_FTSMO']:.6g} s < T_ctrl {b['T_ctrl']:.6g} s: "
          f"{'yes' if b['hierarchy_ok'] else 'NO'}")
    print(f"scenario valid; hash {loaded.scenario.hash}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "bounds": cmd_bounds, "compare": cmd_compare,
            "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
