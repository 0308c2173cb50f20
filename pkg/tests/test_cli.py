"""End-to-end checks of the command-line front end on short horizons."""

import json

import pytest

from flexlink import artifacts, cli
from flexlink.config import default_scenario_path, load_scenario, parse_scenario, prepare


def _scenario(tmp_path, **sim):
    raw = json.loads(default_scenario_path().read_text())
    raw["sim"].update(sim)
    raw["output"]["dir"] = str(tmp_path / "out")
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(raw))
    return path, raw


def _write(tmp_path, raw, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


class TestRun:
    def test_settles_and_writes_artifacts(self, tmp_path, capsys):
        path, _ = _scenario(tmp_path, t_end=2.0)
        out = tmp_path / "run"
        assert cli.main(["run", str(path), "--out", str(out)]) == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "settled"
        assert summary["metrics"]["settling_time_tip"] <= 3.0
        assert summary["trace_columns"] == list(artifacts.TRACE_COLUMNS)
        h = load_scenario(path).hash
        assert summary["scenario_hash"] == h
        assert h in (out / "plot.gp").read_text()
        assert (out / "trace.csv").read_text().split("\n", 1)[0] == ",".join(artifacts.TRACE_COLUMNS)
        assert "settled" in capsys.readouterr().out

    def test_default_out_dir_from_scenario(self, tmp_path):
        path, _ = _scenario(tmp_path, t_end=0.5)
        cli.main(["run", str(path)])
        assert (tmp_path / "out" / "summary.json").exists()

    def test_unsettled(self, tmp_path):
        path, _ = _scenario(tmp_path, t_end=0.5)
        assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_UNSETTLED

    def test_diverged(self, tmp_path, capsys):
        path, _ = _scenario(tmp_path, t_end=2.0)
        out = tmp_path / "o"
        assert cli.main(["run", str(path), "--dt", "0.04", "--out", str(out)]) == cli.EXIT_DIVERGED
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "diverged" and summary["diverged_at"] > 0
        assert "diverged" in capsys.readouterr().err

    def test_eta_below_disturbance_rejected(self, tmp_path, capsys):
        _, raw = _scenario(tmp_path)
        raw["sim"]["disturbance"] = {"kind": "sine", "amplitude": 0.7}
        assert cli.main(["run", str(_write(tmp_path, raw))]) == cli.EXIT_CONFIG
        assert "controller.eta" in capsys.readouterr().err

    def test_hierarchy_rejected(self, tmp_path, capsys):
        _, raw = _scenario(tmp_path)
        raw["observer"].update(k1=1e-5, k2=1e-5)
        assert cli.main(["run", str(_write(tmp_path, raw))]) == cli.EXIT_CONFIG
        assert "T_FTSMO" in capsys.readouterr().err

    @pytest.mark.parametrize("args", [["--dt", "0"], []])
    def test_config_errors(self, tmp_path, args):
        path = tmp_path / "missing.json" if not args else _scenario(tmp_path)[0]
        assert cli.main(["run", str(path), *args]) == cli.EXIT_CONFIG

    def test_bad_scales_are_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            cli.main(["sweep", str(tmp_path / "x.json"), "--scales", "a,b"])


class TestBounds:
    def test_matches_library(self, capsys):
        assert cli.main(["bounds", str(default_scenario_path())]) == cli.EXIT_OK
        text = capsys.readouterr().out
        b = cli.bounds_dict(prepare(load_scenario(default_scenario_path())))
        for key in ("T0", "T1", "T2", "T3", "T_ctrl", "T_FTSMO", "T_total"):
            line = next(ln for ln in text.splitlines() if ln.split()[0] == key)
            assert line.split()[-2] == f"{b[key]:.6g}"
        assert b["T_total"] == b["T_FTSMO"] + b["T_ctrl"]
        assert "hierarchy T_FTSMO < T_ctrl" in text and "yes" in text

    def test_raw_reaching_row(self, tmp_path, capsys):
        _, raw = _scenario(tmp_path)
        raw["controller"].update(c1=2.0, c2=2.0, p=0.5, q=1.5)
        cli.main(["bounds", str(_write(tmp_path, raw))])
        line = next(ln for ln in capsys.readouterr().out.splitlines() if ln.startswith("T3 (raw"))
        assert line.split()[-2] == "2"


class TestCompare:
    def test_zeroed_pd_is_unsettled(self, tmp_path):
        path, raw = _scenario(tmp_path, t_end=2.0)
        raw["sim"]["pd"] = {"kp": 0.0, "kd": 0.0, "tau": 0.01}
        out = tmp_path / "c"
        code = cli.main(["compare", str(_write(tmp_path, raw)), "--out", str(out)])
        assert code == cli.EXIT_OK  # exit status follows the proposed controller
        rows = json.loads((out / "compare.json").read_text())["rows"]
        assert rows["proposed"]["status"] == "settled"
        assert rows["PD"]["status"] == "unsettled" and rows["PD"]["settling_time_tip"] is None

    def test_repeatable(self, tmp_path):
        path, _ = _scenario(tmp_path, t_end=1.0)
        a, b = tmp_path / "a", tmp_path / "b"
        cli.main(["compare", str(path), "--out", str(a)])
        cli.main(["compare", str(path), "--out", str(b)])
        assert (a / "compare.json").read_bytes() == (b / "compare.json").read_bytes()


class TestSweep:
    def test_single_scale_equals_run(self, tmp_path):
        path, _ = _scenario(tmp_path, t_end=3.0)
        cli.main(["run", str(path), "--out", str(tmp_path / "r")])
        code = cli.main(["sweep", str(path), "--scales", "1", "--out", str(tmp_path / "s")])
        run = json.loads((tmp_path / "r" / "summary.json").read_text())
        sweep = json.loads((tmp_path / "s" / "sweep.json").read_text())
        assert code == cli.EXIT_OK
        assert sweep["rows"][0]["settling_time"] == run["metrics"]["settling_time_tip"]
        assert sweep["scenario_hash"] == run["scenario_hash"]

    def test_negative_scale_is_noted(self, tmp_path):
        path, _ = _scenario(tmp_path, t_end=3.0)
        out = tmp_path / "s"
        assert cli.main(["sweep", str(path), "--scales", "-1", "--out", str(out)]) == cli.EXIT_OK
        row = json.loads((out / "sweep.json").read_text())["rows"][0]
        assert row["note"] == "mirrored initial offset" and row["within_bound"]


def test_validate(capsys):
    assert cli.main(["validate", str(default_scenario_path())]) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "observability rank" in text and "scenario valid" in text


def test_bounds_need_no_simulation():
    # the same numbers straight from the parsed scenario
    b = cli.bounds_dict(prepare(parse_scenario({})))
    assert b["hierarchy_ok"] and b["T_total"] > b["T_ctrl"] > b["T_FTSMO"]
