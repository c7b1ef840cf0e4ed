import pytest

from furhaptics.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPeriod:
    def test_measured_fur_prints_8cm_period(self, capsys):
        code, out, _ = run_cli(capsys, "period", "--l", "0.05", "--h", "0.01", "--b", "0.03")
        assert code == 0
        assert out.strip() == "0.078990 m"

    def test_domain_error_exit_code(self, capsys):
        code, _, err = run_cli(capsys, "period", "--l", "0.05", "--h", "0.06", "--b", "0.03")
        assert code == 1
        assert "error" in err


class TestReplay:
    def test_replay_writes_traces(self, capsys, tmp_path):
        traj = tmp_path / "traj.csv"
        traj.write_text("t,x,y,z\n0,0.1,0.1,0.01\n5,0.4,0.1,0.01\n")
        cfg = tmp_path / "session.cfg"
        cfg.write_text("patch.extent = 0.8,0.2\n")
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys, "replay", str(traj), "--config", str(cfg), "--out", str(out_dir)
        )
        assert code == 0
        assert (out_dir / "commands.jsonl").exists()
        assert (out_dir / "focal.csv").exists()
        assert (out_dir / "report.txt").exists()
        assert "session.ticks=451" in out

    def test_empty_trajectory_fails(self, capsys, tmp_path):
        traj = tmp_path / "empty.csv"
        traj.write_text("t,x,y,z\n")
        code, _, err = run_cli(capsys, "replay", str(traj))
        assert code != 0
        assert "empty trajectory" in err

    def test_missing_file_fails(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "replay", str(tmp_path / "nope.csv"))
        assert code != 0
        assert "error" in err


class TestFitCommands:
    def test_synthetic_round_trip_via_cli(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, _, _ = run_cli(
            capsys,
            "gen-synthetic",
            "--k", "2e-4", "--l", "0.05", "--h", "0.01", "--b", "0.03",
            "--out", str(trace),
        )
        assert code == 0
        code, out, _ = run_cli(
            capsys, "fit", str(trace), "--direction", "reverse", "--l", "0.05", "--b", "0.03"
        )
        assert code == 0
        values = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert abs(float(values["k_hat"]) - 2e-4) / 2e-4 < 0.01
        assert abs(float(values["P_hat"]) - 0.07898979485566357) < 0.01 * 0.079

    def test_growth_fit_via_cli(self, capsys, tmp_path):
        trace = tmp_path / "growth.csv"
        run_cli(
            capsys,
            "gen-synthetic",
            "--k", "2e-4", "--l", "0.05", "--h", "0.01", "--b", "0.03",
            "--direction", "growth", "--f0", "0.05",
            "--out", str(trace),
        )
        code, out, _ = run_cli(
            capsys, "fit", str(trace), "--direction", "growth", "--l", "0.05"
        )
        assert code == 0
        values = dict(line.split("=", 1) for line in out.strip().splitlines())
        assert float(values["F0_hat"]) == pytest.approx(0.05)

    def test_reverse_requires_bundle_width(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        run_cli(
            capsys,
            "gen-synthetic",
            "--k", "2e-4", "--l", "0.05", "--h", "0.01", "--b", "0.03",
            "--out", str(trace),
        )
        code, _, err = run_cli(capsys, "fit", str(trace), "--direction", "reverse", "--l", "0.05")
        assert code == 1
        assert "--b" in err

    def test_report_file(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        run_cli(
            capsys,
            "gen-synthetic",
            "--k", "2e-4", "--l", "0.05", "--h", "0.01", "--b", "0.03",
            "--out", str(trace),
        )
        report = tmp_path / "fit.txt"
        code, _, _ = run_cli(
            capsys, "fit", str(trace), "--direction", "reverse",
            "--l", "0.05", "--b", "0.03", "--report", str(report),
        )
        assert code == 0
        assert "k_hat=" in report.read_text()


class TestField:
    def test_field_export(self, capsys, tmp_path):
        grid_csv = tmp_path / "field.csv"
        pgm = tmp_path / "field.pgm"
        code, out, _ = run_cli(
            capsys,
            "field", "--focus", "0,0,0.2", "--grid", "11", "--extent", "0.01",
            "--out", str(grid_csv), "--pgm", str(pgm),
        )
        assert code == 0
        assert "peak_cell=5,5" in out
        assert grid_csv.exists()
        assert (tmp_path / "field.csv.meta").exists()
        assert pgm.read_text().startswith("P2")

    def test_bad_focus_argument(self, capsys):
        code, _, err = run_cli(capsys, "field", "--focus", "1,2")
        assert code == 1
        assert "x,y,z" in err


class TestMisc:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert "furhaptics" in capsys.readouterr().out

    def test_no_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2
