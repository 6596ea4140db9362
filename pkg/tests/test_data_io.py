"""Tests for CSV and JSON input files"""

import json

import numpy as np
import pytest

from overtake_lab.core.simulator import default_overtake_spec, run_scenario
from overtake_lab.exceptions import DataFileError, ObservationDataError, SnapshotValidationError
from overtake_lab.models.geometry_models import CameraModel, RenderedObservation
from overtake_lab.models.survival_models import CovariateVector, DurationObservation
from overtake_lab.models.trace_models import Direction
from overtake_lab.utils.data_io import (
    parse_snapshot,
    read_calibration,
    read_camera,
    read_observations,
    read_records,
    read_rendered,
    read_scenario,
    read_snapshots,
    read_traces,
    write_camera,
    write_observations,
    write_records,
    write_rendered,
    write_scenario,
    write_traces,
)

TRACE_HEADER = "t_s,vehicle_id,direction,s_m,d_m,v_mps\n"


@pytest.fixture(scope="module")
def default_run():
    return run_scenario(default_overtake_spec())


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestTraceFiles:
    """Test the long-format trace CSV"""

    def test_simulated_traces(self, default_run, tmp_path):
        path = tmp_path / "traces.csv"
        write_traces(default_run.traces, path)
        traces = read_traces(path)

        assert list(traces) == list(default_run.traces)
        assert traces["car2"].direction is Direction.ONCOMING
        np.testing.assert_array_equal(traces["ego"].s, default_run.ego.s)
        np.testing.assert_array_equal(traces["ego"].d, default_run.ego.d)

    def test_rows_sorted_by_time(self, tmp_path):
        path = write_text(
            tmp_path / "traces.csv",
            TRACE_HEADER
            + "0.2,ego,with_ego,2.0,-2.0,10.0\n"
            + "0.0,ego,with_ego,0.0,-2.0,10.0\n"
            + "0.1,ego,with_ego,1.0,-2.0,10.0\n",
        )
        ego = read_traces(path)["ego"]
        np.testing.assert_array_equal(ego.t, [0.0, 0.1, 0.2])
        np.testing.assert_array_equal(ego.s, [0.0, 1.0, 2.0])

    def test_missing_column(self, tmp_path):
        path = write_text(tmp_path / "traces.csv", "t_s,vehicle_id,s_m\n0.0,ego,0.0\n")
        with pytest.raises(DataFileError) as exc_info:
            read_traces(path)

        assert "direction" in exc_info.value.reason

    def test_empty_cell_names_row(self, tmp_path):
        path = write_text(
            tmp_path / "traces.csv",
            TRACE_HEADER + "0.0,ego,with_ego,0.0,-2.0,10.0\n0.1,ego,with_ego,,-2.0,10.0\n",
        )
        with pytest.raises(DataFileError) as exc_info:
            read_traces(path)

        assert exc_info.value.row == 2

    def test_unknown_direction(self, tmp_path):
        path = write_text(tmp_path / "traces.csv", TRACE_HEADER + "0.0,ego,sideways,0.0,-2.0,10.0\n")
        with pytest.raises(DataFileError):
            read_traces(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFileError) as exc_info:
            read_traces(tmp_path / "absent.csv")

        assert exc_info.value.reason == "file not found"


class TestObservationFiles:
    """Test duration observation CSVs"""

    def test_write_then_read(self, tmp_path):
        observations = [
            DurationObservation(duration=7.5, covariates=CovariateVector(ud=6.0, pd=9.0, dab=18.5, multiple=0)),
            DurationObservation(duration=11.2, covariates=CovariateVector(ud=3.5, pd=12.0, dab=-2.0, multiple=1)),
        ]
        path = tmp_path / "observations.csv"
        write_observations(observations, path)

        assert read_observations(path) == observations

    def test_non_positive_duration(self, tmp_path):
        path = write_text(
            tmp_path / "observations.csv",
            "duration_s,ud_m,pd_m,dab_kmh,multiple\n5.0,1,2,3,0\n0.0,1,2,3,0\n",
        )
        with pytest.raises(ObservationDataError) as exc_info:
            read_observations(path)

        assert exc_info.value.index == 1

    def test_fractional_indicator(self, tmp_path):
        path = write_text(tmp_path / "observations.csv", "duration_s,ud_m,pd_m,dab_kmh,multiple\n5.0,1,2,3,0.5\n")
        with pytest.raises(ObservationDataError):
            read_observations(path)

    def test_text_in_numeric_column(self, tmp_path):
        path = write_text(tmp_path / "observations.csv", "duration_s,ud_m,pd_m,dab_kmh,multiple\nfast,1,2,3,0\n")
        with pytest.raises(DataFileError):
            read_observations(path)


class TestCameraFiles:
    """Test camera and calibration inputs"""

    def test_camera_aliases(self, tmp_path):
        path = write_text(tmp_path / "camera.json", json.dumps({"c_px": 1000.0, "y1_m": 1.2, "y_g_px": 400.0}))
        assert read_camera(path) == CameraModel(c=1000.0, y1=1.2, y_g=400.0)

    def test_camera_round_trip(self, tmp_path):
        camera = CameraModel(c=850.0, y1=0.9, y_g=360.0)
        path = tmp_path / "camera.json"
        write_camera(camera, path)
        assert read_camera(path) == camera

    def test_invalid_camera(self, tmp_path):
        path = write_text(tmp_path / "camera.json", json.dumps({"c_px": -1.0, "y1_m": 1.2}))
        with pytest.raises(DataFileError):
            read_camera(path)

    def test_calibration_grid(self, tmp_path):
        path = write_text(
            tmp_path / "calibration.csv",
            "session,target_m,y_f_px,x_offset_px\n"
            "0,10,520,0\n0,20,460,0\n"
            "1,10,521,0\n1,20,459,0\n",
        )
        calibration = read_calibration(path)
        assert calibration.n == 2
        assert calibration.p == 2
        assert calibration.measured_for(1) == [10.0, 20.0]

    def test_uneven_sessions(self, tmp_path):
        path = write_text(
            tmp_path / "calibration.csv",
            "session,target_m,y_f_px,x_offset_px\n0,10,520,0\n0,20,460,0\n1,10,521,0\n",
        )
        with pytest.raises(DataFileError):
            read_calibration(path)

    def test_rendered_round_trip(self, tmp_path):
        observations = [
            RenderedObservation(t=0.0, vehicle_id="car1", y_f=430.0, x_offset=12.5),
            RenderedObservation(t=0.1, vehicle_id="007", y_f=431.0, x_offset=-3.0),
        ]
        path = tmp_path / "rendered.csv"
        write_rendered(observations, path)
        assert read_rendered(path) == observations


class TestSnapshotFiles:
    """Test traffic snapshot validation"""

    def test_valid_snapshot(self):
        snapshot = parse_snapshot(
            {"ego": {"speed": 15.0}, "lead": {"gap": 8.0, "speed": 10.0}, "oncoming": None}
        )
        assert snapshot.oncoming is None
        assert snapshot.platoon == ()

    def test_unknown_field(self):
        with pytest.raises(SnapshotValidationError) as exc_info:
            parse_snapshot({"ego": {"speed": 15.0}, "lead": {"gap": 8.0, "speed": 10.0}, "weather": "rain"})

        assert "weather" in exc_info.value.reason

    def test_negative_gap(self):
        with pytest.raises(SnapshotValidationError) as exc_info:
            parse_snapshot({"ego": {"speed": 15.0}, "lead": {"gap": -1.0, "speed": 10.0}})

        assert exc_info.value.reason.startswith("lead.gap")

    def test_missing_lead(self):
        with pytest.raises(SnapshotValidationError):
            parse_snapshot({"ego": {"speed": 15.0}})

    def test_single_or_list(self, tmp_path):
        one = {"ego": {"speed": 15.0}, "lead": {"gap": 8.0, "speed": 10.0}}
        single = write_text(tmp_path / "one.json", json.dumps(one))
        many = write_text(tmp_path / "many.json", json.dumps([one, {**one, "timestamp": 1.0}]))

        assert len(read_snapshots(single)) == 1
        assert [s.timestamp for s in read_snapshots(many)] == [0.0, 1.0]


class TestScenarioAndRecordFiles:
    """Test scenario specs and maneuver records on disk"""

    def test_scenario_round_trip(self, tmp_path):
        path = tmp_path / "scenario.json"
        write_scenario(default_overtake_spec(), path)
        assert read_scenario(path) == default_overtake_spec()

    def test_invalid_scenario(self, tmp_path):
        path = write_text(tmp_path / "scenario.json", json.dumps({"vehicles": [], "dt": -1}))
        with pytest.raises(DataFileError):
            read_scenario(path)

    def test_records_round_trip(self, default_run, tmp_path):
        path = tmp_path / "records.json"
        write_records([default_run.ground_truth.record], path)
        assert read_records(path) == [default_run.ground_truth.record]

    def test_records_must_be_list(self, tmp_path):
        path = write_text(tmp_path / "records.json", json.dumps({"m1": 1.0}))
        with pytest.raises(DataFileError):
            read_records(path)
