"""Tests for the two-lane scenario simulator"""

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from overtake_lab.core.simulator import (
    add_gps_noise,
    default_overtake_spec,
    profile_motion,
    render_observations,
    run_scenario,
    run_scenarios,
)
from overtake_lab.exceptions import CollisionError, DomainError
from overtake_lab.models.geometry_models import CameraModel
from overtake_lab.models.scenario_models import (
    AccelerationSegment,
    OvertakeScript,
    ScenarioSpec,
    VehicleSpec,
)
from overtake_lab.models.trace_models import Direction, VehicleTrace


@pytest.fixture(scope="module")
def default_run():
    return run_scenario(default_overtake_spec())


def platoon_spec() -> ScenarioSpec:
    """Ego passes two cars 10 m apart before returning"""
    return ScenarioSpec(
        vehicles=(
            VehicleSpec(id="ego", s0=0.0, v0=12.0),
            VehicleSpec(id="car1", s0=40.0, v0=8.0),
            VehicleSpec(id="car1b", s0=50.0, v0=8.0),
            VehicleSpec(id="car2", direction=Direction.ONCOMING, s0=400.0, v0=15.0),
        ),
        ego_script=OvertakeScript(lead_id="car1", clear_vehicle_id="car1b"),
        dt=0.1,
        duration=20.0,
    )


def aborted_spec() -> ScenarioSpec:
    """Ego drifts toward the centre line and gives up without crossing it"""
    return ScenarioSpec(
        vehicles=(
            VehicleSpec(id="ego", s0=0.0, v0=12.0),
            VehicleSpec(id="car1", s0=25.0, v0=11.0),
        ),
        ego_script=OvertakeScript(
            lead_id="car1",
            peak_speed=13.0,
            acceleration=1.0,
            deceleration=1.0,
            lateral_target=-0.4,
            abort_after=2.0,
        ),
        dt=0.1,
        duration=15.0,
    )


class TestProfileMotion:
    """Test closed-form longitudinal motion"""

    def test_constant_speed(self):
        """No profile means s0 + v0·t"""
        t = np.arange(50) * 0.1
        s, v = profile_motion(VehicleSpec(id="car", s0=5.0, v0=8.0), t)
        np.testing.assert_allclose(s, 5.0 + 8.0 * t)
        np.testing.assert_allclose(v, 8.0)

    def test_oncoming_moves_backwards(self):
        t = np.arange(10) * 0.1
        s, v = profile_motion(VehicleSpec(id="car2", direction=Direction.ONCOMING, s0=100.0, v0=15.0), t)
        np.testing.assert_allclose(s, 100.0 - 15.0 * t)
        assert np.all(v == 15.0)

    def test_braking_stops_at_zero(self):
        """A braking vehicle stays stopped"""
        vehicle = VehicleSpec(id="car", v0=4.0, profile=(AccelerationSegment(start=1.0, acceleration=-2.0),))
        t = np.arange(60) * 0.1
        s, v = profile_motion(vehicle, t)

        assert v.min() == 0.0
        assert s[-1] == pytest.approx(4.0 + 4.0)  # 4 m cruising, 4 m braking
        assert np.all(np.diff(s) >= -1e-12)

    def test_accelerate_then_cruise(self):
        vehicle = VehicleSpec(
            id="car",
            v0=10.0,
            profile=(
                AccelerationSegment(start=0.0, acceleration=1.0),
                AccelerationSegment(start=2.0, acceleration=0.0),
            ),
        )
        s, v = profile_motion(vehicle, np.array([0.0, 1.0, 2.0, 3.0]))
        np.testing.assert_allclose(v, [10.0, 11.0, 12.0, 12.0])
        np.testing.assert_allclose(s, [0.0, 10.5, 22.0, 34.0])


class TestScriptedOvertake:
    """Test the scripted ego and its ground truth"""

    def test_timeline(self, default_run):
        """Trigger at 20 m, 4 s beyond the centre line"""
        truth = default_run.ground_truth
        assert truth is not None
        phases = truth.phases

        assert phases.intrusion is True
        assert phases.t0 == pytest.approx(5.0)
        assert phases.t1 == pytest.approx(6.1)
        assert phases.t2 == pytest.approx(8.2)
        assert phases.t3 == pytest.approx(10.1)
        assert phases.t4 == pytest.approx(11.1)
        assert phases.t5 == pytest.approx(13.4)

    def test_record(self, default_run):
        record = default_run.ground_truth.record

        assert record.lead_id == "car1"
        assert record.m1 == pytest.approx(20.0)
        assert record.dab == pytest.approx(14.4)
        assert record.a1 == pytest.approx(12.0)
        assert record.n_overtaken == 1
        assert record.multiple == 0
        assert record.m4 == pytest.approx(54.4)
        assert record.opposite_lane_time == pytest.approx(4.0, abs=0.1 + 1e-9)
        assert record.t_total == pytest.approx(8.4)
        assert record.m2 is not None and record.m2 > 0

    def test_oncoming_gap(self, default_run):
        """m3 is the ego to oncoming gap at the first crossing"""
        record = default_run.ground_truth.record
        k1 = int(round(record.phases.t1 / 0.1))
        expected = default_run.traces["car2"].s[k1] - default_run.ego.s[k1]
        assert record.m3 == pytest.approx(expected)

    def test_ego_stays_on_road(self, default_run):
        assert np.all(np.abs(default_run.ego.d) <= 4.0)
        assert default_run.ego.d.max() == pytest.approx(2.0)

    def test_traces_share_clock(self, default_run):
        assert len(default_run.t) == 201
        for trace in default_run.traces.values():
            np.testing.assert_array_equal(trace.t, default_run.t)

    def test_platoon_pass(self):
        """Clearing the second car counts two vehicles"""
        record = run_scenario(platoon_spec()).ground_truth.record
        assert record.n_overtaken == 2
        assert record.multiple == 1
        assert record.m4 == pytest.approx(10.0)

    def test_aborted_without_intrusion(self):
        """Lateral drift that never crosses the centre line"""
        truth = run_scenario(aborted_spec()).ground_truth
        phases = truth.phases

        assert phases.intrusion is False
        assert phases.t1 == phases.t2 == phases.t3 == phases.t4 == pytest.approx(8.9)
        assert phases.t5 == pytest.approx(9.4)
        assert truth.record.n_overtaken == 0
        assert truth.record.m2 is None
        assert truth.record.opposite_lane_time == 0.0

    def test_unscripted_run_has_no_ground_truth(self):
        spec = ScenarioSpec(vehicles=(VehicleSpec(id="ego", v0=10.0), VehicleSpec(id="car1", s0=50.0, v0=10.0)))
        output = run_scenario(spec)
        assert output.ground_truth is None
        assert len(output.t) == spec.n_samples

    def test_deterministic(self):
        first = run_scenario(default_overtake_spec())
        second = run_scenario(default_overtake_spec())
        for vehicle_id, trace in first.traces.items():
            np.testing.assert_array_equal(trace.s, second.traces[vehicle_id].s)
            np.testing.assert_array_equal(trace.d, second.traces[vehicle_id].d)

    def test_run_scenarios_keeps_order(self):
        outputs = run_scenarios([default_overtake_spec(), aborted_spec()], max_workers=2)
        assert outputs[0].ground_truth.phases.intrusion is True
        assert outputs[1].ground_truth.phases.intrusion is False


class TestCollisions:
    """Test the collision envelope"""

    def test_rear_end_collision(self):
        """A faster follower hits the car 10 m ahead after 2.1 s"""
        spec = ScenarioSpec(
            vehicles=(VehicleSpec(id="ego", v0=12.0), VehicleSpec(id="car1", s0=10.0, v0=8.0)),
            duration=5.0,
        )
        with pytest.raises(CollisionError) as exc_info:
            run_scenario(spec)

        report = exc_info.value.report
        assert {report.vehicle_a, report.vehicle_b} == {"ego", "car1"}
        assert report.t == pytest.approx(2.1)
        assert report.longitudinal_gap < 2.0
        partial = exc_info.value.partial_output
        assert len(partial.t) == 22
        assert len(partial.traces["ego"]) == 22

    def test_opposite_lanes_do_not_collide(self):
        """Oncoming traffic in its own lane passes safely"""
        spec = ScenarioSpec(
            vehicles=(
                VehicleSpec(id="ego", v0=10.0),
                VehicleSpec(id="car2", direction=Direction.ONCOMING, s0=100.0, v0=10.0),
            ),
            duration=10.0,
        )
        assert run_scenario(spec).ground_truth is None


class TestObservationsAndNoise:
    """Test rendering and GPS noise"""

    def test_render_respects_visibility(self, default_run):
        camera = CameraModel(c=1000.0, y1=1.2, y_g=400.0)
        observations = render_observations(default_run, camera, visibility=60.0)

        assert observations
        assert {obs.vehicle_id for obs in observations} <= {"car1", "car2", "bike2"}
        first = [obs for obs in observations if obs.t == 0.0]
        assert [obs.vehicle_id for obs in first] == ["car1"]
        assert first[0].y_f == pytest.approx(400.0 + 1000.0 * 1.2 / 40.0)

    def test_noise_is_seeded(self, default_run):
        a = add_gps_noise(default_run.traces, 0.01, 0.01, seed=3)
        b = add_gps_noise(default_run.traces, 0.01, 0.01, seed=3)
        np.testing.assert_array_equal(a["ego"].s, b["ego"].s)
        assert not np.array_equal(a["ego"].s, default_run.ego.s)

    def test_zero_noise_copies(self, default_run):
        noisy = add_gps_noise(default_run.traces, 0.0, 0.0, seed=1)
        np.testing.assert_array_equal(noisy["ego"].v, default_run.ego.v)
        assert noisy["ego"].v is not default_run.ego.v

    def test_negative_sigma(self, default_run):
        with pytest.raises(DomainError):
            add_gps_noise(default_run.traces, -0.1, 0.0)

    def test_noise_statistics(self):
        """10⁵ samples at σ = 0.5 m give the requested mean and spread"""
        n = 100_000
        t = np.arange(n) * 0.1
        trace = VehicleTrace(
            vehicle_id="ego", direction=Direction.WITH_EGO, t=t, s=12.0 * t, d=np.full(n, -2.0), v=np.full(n, 12.0)
        )
        noisy = add_gps_noise({"ego": trace}, 0.5, 0.0, seed=8)
        error = noisy["ego"].s - trace.s

        assert abs(error.mean()) < 0.01
        assert error.std() == pytest.approx(0.5, abs=0.01)


class TestKinematics:
    """Test that positions and speeds describe the same motion"""

    def test_position_is_speed_integral(self, default_run):
        """Trapezoidal integral of speed matches displacement within dt²·|a|max"""
        dt = default_run.spec.dt
        bound = dt**2 * 1.5 + 1e-9
        for trace in default_run.traces.values():
            sign = -1.0 if trace.direction is Direction.ONCOMING else 1.0
            travelled = sign * (trace.s - trace.s[0])
            integral = cumulative_trapezoid(trace.v, trace.t, initial=0.0)
            assert np.max(np.abs(travelled - integral)) <= bound, trace.vehicle_id

    def test_speeds_stay_non_negative(self, default_run):
        for trace in default_run.traces.values():
            assert np.all(trace.v >= 0)
