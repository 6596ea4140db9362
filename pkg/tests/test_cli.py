"""CLI tests covering every subcommand and the exit-code contract"""

import json
from unittest.mock import MagicMock, patch

import pandas as pd
import pytest

from overtake_lab.cli import RunConfig, create_parser, dispatch, main
from overtake_lab.core.fitting import fit_aft
from overtake_lab.models.scenario_models import ScenarioSpec, VehicleSpec
from overtake_lab.utils.data_io import read_observations, write_scenario
from overtake_lab.utils.model_io import load_model

SAFE_SNAPSHOT = {
    "timestamp": 0.0,
    "ego": {"position": 0.0, "speed": 15.0},
    "lead": {"gap": 8.3, "speed": 9.36},
    "oncoming": None,
}
UNSAFE_SNAPSHOT = {**SAFE_SNAPSHOT, "timestamp": 1.0, "oncoming": {"gap": 50.0, "speed": 15.0}}


@pytest.fixture
def snapshot_file(tmp_path):
    def write(data):
        path = tmp_path / "snapshot.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write


class TestArgumentParsing:
    """Test parser layout and defaults"""

    def test_decide_defaults(self):
        """The built-in coefficient table is the default model"""
        args = create_parser().parse_args(["decide", "--snapshot", "s.json"])

        assert args.model == "paper-table"
        assert args.time_threshold is None
        assert args.distance_threshold is None
        assert args.seed is None

    def test_profile_base_is_parsed(self):
        args = create_parser().parse_args(["profile", "--covariate", "pd", "--levels", "5,10", "--out", "c.csv"])

        assert args.levels == [5.0, 10.0]
        assert args.base.ud == pytest.approx(6.9)
        assert args.base.multiple == 0
        assert args.t_max == 30.0

    def test_common_options_after_command(self):
        args = create_parser().parse_args(["synthesize", "--n", "5", "--out", "o.csv", "--seed", "9", "-v"])
        run = RunConfig.from_args(args)

        assert run.seed == 9
        assert run.log_level == "DEBUG"
        assert run.command == "synthesize"

    def test_fit_mode_choices(self):
        args = create_parser().parse_args(["fit", "--data", "d.csv", "--out", "m.json", "--mode", "standard"])
        assert args.mode == "standard"


class TestExitCodes:
    """Test usage errors and failure handling"""

    def test_no_arguments(self, capsys):
        assert dispatch([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_option(self, capsys):
        """Usage errors exit 1, keeping 2 for Unsafe"""
        assert dispatch(["eval", "--bogus"]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_covariates(self):
        assert dispatch(["eval", "--covariates", "speed=3", "--t", "1"]) == 1

    def test_help(self, capsys):
        assert dispatch(["--help"]) == 0
        assert "overtake-lab" in capsys.readouterr().out

    def test_missing_input_file(self, tmp_path):
        assert dispatch(["fit", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "m.json")]) == 1

    def test_missing_output_directory(self, tmp_path):
        out = tmp_path / "nowhere" / "obs.csv"
        assert dispatch(["synthesize", "--n", "10", "--out", str(out)]) == 1

    def test_keyboard_interrupt(self):
        with patch.dict("overtake_lab.cli.COMMANDS", {"eval": MagicMock(side_effect=KeyboardInterrupt)}):
            assert dispatch(["eval", "--covariates", "pd=1", "--t", "1"]) == 130

    def test_unexpected_error(self):
        with patch.dict("overtake_lab.cli.COMMANDS", {"eval": MagicMock(side_effect=RuntimeError("boom"))}):
            assert dispatch(["eval", "--covariates", "pd=1", "--t", "1"]) == 1

    def test_main_exits_with_code(self):
        with patch("sys.argv", ["overtake-lab"]):
            with pytest.raises(SystemExit) as exc_info:
                main()

        assert exc_info.value.code == 1


class TestEvalAndDecide:
    """Test JSON results on stdout"""

    def test_eval_baseline(self, capsys):
        """All covariates zero leaves the intercept alone"""
        code = dispatch(["eval", "--covariates", "ud=0,pd=0,dab=0,multiple=0", "--t", "1"])
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["median"] == pytest.approx(1.9251, abs=1e-4)
        assert result["survival"] + result["cdf"] == pytest.approx(1.0)
        assert result["hazard"] == pytest.approx(result["density"] / result["survival"])

    def test_decide_safe(self, snapshot_file, capsys):
        code = dispatch(["decide", "--snapshot", str(snapshot_file(SAFE_SNAPSHOT))])
        result = json.loads(capsys.readouterr().out)

        assert code == 0
        assert result["verdict"] == "Safe"
        assert result["t_avail"] is None
        assert result["reasons"] == []

    def test_decide_unsafe(self, snapshot_file, capsys):
        code = dispatch(["decide", "--snapshot", str(snapshot_file(UNSAFE_SNAPSHOT))])
        result = json.loads(capsys.readouterr().out)

        assert code == 2
        assert result["verdict"] == "Unsafe"
        assert "oncoming_gap_below_distance_threshold" in result["reasons"]

    def test_decide_threshold_override(self, snapshot_file, capsys):
        """A 40 m distance threshold lets the 50 m gap through rule (a)"""
        path = snapshot_file(UNSAFE_SNAPSHOT)
        dispatch(["decide", "--snapshot", str(path), "--distance-threshold", "40"])
        result = json.loads(capsys.readouterr().out)

        assert "oncoming_gap_below_distance_threshold" not in result["reasons"]

    def test_decide_stream(self, snapshot_file, capsys):
        path = snapshot_file([UNSAFE_SNAPSHOT, SAFE_SNAPSHOT])
        code = dispatch(["decide", "--snapshot", str(path)])
        results = json.loads(capsys.readouterr().out)

        assert code == 2
        assert [r["timestamp"] for r in results] == [0.0, 1.0]
        assert [r["verdict"] for r in results] == ["Safe", "Unsafe"]

    def test_decide_invalid_snapshot(self, snapshot_file):
        path = snapshot_file({**SAFE_SNAPSHOT, "ego": {"speed": -3.0}})
        assert dispatch(["decide", "--snapshot", str(path)]) == 1


class TestPipelineCommands:
    """Test the file-producing subcommands"""

    def test_simulate_then_extract(self, tmp_path):
        traces = tmp_path / "run.csv"
        truth = tmp_path / "truth.json"
        records = tmp_path / "records.json"
        observations = tmp_path / "obs.csv"
        summary = tmp_path / "summary.csv"

        assert dispatch(["simulate", "--out-traces", str(traces), "--ground-truth", str(truth)]) == 0
        assert json.loads(truth.read_text())["phases"]["t0"] == pytest.approx(5.0)

        code = dispatch(
            [
                "extract",
                "--traces",
                str(traces),
                "--out",
                str(records),
                "--observations",
                str(observations),
                "--summary",
                str(summary),
            ]
        )
        assert code == 0
        extracted = json.loads(records.read_text())
        assert len(extracted) == 1
        assert extracted[0]["m1"] == pytest.approx(20.0)
        assert read_observations(observations)[0].covariates.pd == pytest.approx(20.0)
        assert pd.read_csv(summary, index_col="variable").loc["n_overtaken", "N"] == 1

    def test_simulate_rendered_extract(self, tmp_path):
        traces = tmp_path / "run.csv"
        camera = tmp_path / "camera.json"
        rendered = tmp_path / "rendered.csv"
        records = tmp_path / "records.json"
        camera.write_text(json.dumps({"c_px": 1000.0, "y1_m": 1.2, "y_g_px": 400.0}), encoding="utf-8")

        code = dispatch(
            ["simulate", "--out-traces", str(traces), "--camera", str(camera), "--out-observations", str(rendered)]
        )
        assert code == 0
        assert rendered.exists()

        code = dispatch(
            ["extract", "--traces", str(traces), "--rendered", str(rendered), "--camera", str(camera)]
            + ["--out", str(records)]
        )
        assert code == 0
        assert json.loads(records.read_text())[0]["n_overtaken"] == 1

    def test_simulate_collision_writes_partial_traces(self, tmp_path):
        spec = tmp_path / "crash.json"
        write_scenario(
            ScenarioSpec(
                vehicles=(VehicleSpec(id="ego", v0=12.0), VehicleSpec(id="car1", s0=10.0, v0=8.0)),
                duration=5.0,
            ),
            spec,
        )
        traces = tmp_path / "run.csv"

        assert dispatch(["simulate", "--spec", str(spec), "--out-traces", str(traces)]) == 1
        assert len(pd.read_csv(traces)) == 2 * 22

    def test_extract_reports_failures(self, tmp_path):
        records = tmp_path / "records.json"
        flat = tmp_path / "flat.csv"
        flat.write_text(
            "t_s,vehicle_id,direction,s_m,d_m,v_mps\n"
            + "".join(f"{k / 10},ego,with_ego,{k},-2.0,10.0\n" for k in range(20))
            + "".join(f"{k / 10},car1,with_ego,{30 + k},-2.0,10.0\n" for k in range(20)),
            encoding="utf-8",
        )

        assert dispatch(["extract", "--traces", str(flat), "--out", str(records)]) == 1
        assert json.loads(records.read_text()) == []

    def test_synthesize_is_seeded(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"

        assert dispatch(["synthesize", "--n", "50", "--out", str(first), "--seed", "5"]) == 0
        assert dispatch(["synthesize", "--n", "50", "--out", str(second), "--seed", "5"]) == 0
        assert first.read_text() == second.read_text()
        assert len(read_observations(first)) == 50

    def test_synthesize_then_fit(self, tmp_path, capsys):
        data = tmp_path / "obs.csv"
        model = tmp_path / "model.json"
        assert dispatch(["synthesize", "--n", "400", "--out", str(data), "--seed", "3"]) == 0

        code = dispatch(["fit", "--data", str(data), "--out", str(model)])
        out = capsys.readouterr().out

        assert code == 0
        assert "exp_beta" in out
        assert "converged=True" in out
        fitted = load_model(model)
        assert fitted.fit_meta["n"] == 400
        assert fitted.gamma == pytest.approx(0.253, abs=0.05)

    def test_fit_too_few_rows(self, tmp_path):
        data = tmp_path / "obs.csv"
        data.write_text("duration_s,ud_m,pd_m,dab_kmh,multiple\n5.0,1,2,3,0\n6.0,2,3,4,1\n", encoding="utf-8")
        assert dispatch(["fit", "--data", str(data), "--out", str(tmp_path / "m.json")]) == 1

    def test_profile_curves(self, tmp_path):
        out = tmp_path / "curves.csv"
        assert dispatch(["profile", "--covariate", "multiple", "--levels", "0,1", "--out", str(out)]) == 0

        curves = pd.read_csv(out)
        assert list(curves.columns) == ["t_s", "multiple=0", "multiple=1"]
        assert len(curves) == 61
        assert curves.loc[0, "multiple=0"] == 1.0
        assert (curves["multiple=1"] >= curves["multiple=0"]).all()

    def test_calibrate(self, tmp_path, capsys):
        camera = tmp_path / "camera.json"
        calib = tmp_path / "calib.csv"
        camera.write_text(json.dumps({"c_px": 1000.0, "y1_m": 1.2, "y_g_px": 400.0}), encoding="utf-8")
        calib.write_text(
            "session,target_m,y_f_px,x_offset_px\n0,10,520,0\n0,20,460,0\n1,10,520,0\n1,20,460,0\n",
            encoding="utf-8",
        )

        assert dispatch(["calibrate", "--calib", str(calib), "--camera", str(camera)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["mape_percent"] == pytest.approx(0.0, abs=1e-9)
        assert result["sessions"] == 2

    def test_fit_honours_gradient_setting(self, tmp_path):
        """A numeric-gradient setting reaches the optimizer without the flag"""
        data = tmp_path / "obs.csv"
        assert dispatch(["synthesize", "--n", "200", "--out", str(data), "--seed", "4"]) == 0

        with (
            patch("overtake_lab.cli.settings.fit.analytic_gradient", False),
            patch("overtake_lab.cli.fit_aft", wraps=fit_aft) as mock_fit,
        ):
            assert dispatch(["fit", "--data", str(data), "--out", str(tmp_path / "m.json")]) == 0

        assert mock_fit.call_args[0][1].analytic_gradient is False


class TestRepeatability:
    """Test that reruns with one seed agree and inputs stay untouched"""

    def test_simulate_is_seeded(self, tmp_path):
        runs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            code = dispatch(
                ["simulate", "--out-traces", str(path), "--noise-pos", "0.05", "--noise-speed", "0.05"]
                + ["--seed", "11"]
            )
            assert code == 0
            runs.append(path.read_text())

        assert runs[0] == runs[1]

    def test_fit_is_repeatable_and_leaves_data(self, tmp_path):
        data = tmp_path / "obs.csv"
        assert dispatch(["synthesize", "--n", "300", "--out", str(data), "--seed", "6"]) == 0
        before = data.read_bytes()

        models = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert dispatch(["fit", "--data", str(data), "--out", str(out), "--seed", "6"]) == 0
            models.append(out.read_text())

        assert models[0] == models[1]
        assert data.read_bytes() == before

    def test_eval_is_repeatable(self, capsys):
        outputs = []
        for _ in range(2):
            assert dispatch(["eval", "--covariates", "ud=7,pd=10,dab=5,multiple=1", "--t", "4", "--seed", "1"]) == 0
            outputs.append(capsys.readouterr().out)

        assert outputs[0] == outputs[1]

    def test_extract_leaves_traces(self, tmp_path):
        traces = tmp_path / "run.csv"
        assert dispatch(["simulate", "--out-traces", str(traces)]) == 0
        before = traces.read_bytes()

        assert dispatch(["extract", "--traces", str(traces), "--out", str(tmp_path / "records.json")]) == 0
        assert traces.read_bytes() == before
