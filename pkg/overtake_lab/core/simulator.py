"""Deterministic two-lane traffic simulator

Vehicles are point masses sampled at ``t_k = k·dt``. Unscripted vehicles
follow piecewise-constant acceleration profiles in closed form. A scripted
ego runs a small state machine (cruise, out, return, recover) whose
longitudinal motion is a capped constant-acceleration ramp and whose lane
changes follow a logistic S-curve.
"""

import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import ValidationError

from ..config.settings import settings
from ..exceptions import CollisionError, DomainError
from ..logging_config import get_logger
from ..models.geometry_models import CameraModel, RenderedObservation
from ..models.scenario_models import (
    CollisionReport,
    GroundTruth,
    OvertakeScript,
    ScenarioSpec,
    SimOutput,
    VehicleSpec,
)
from ..models.trace_models import (
    Direction,
    ManeuverRecord,
    PhaseBoundaries,
    RoadGeometry,
    VehicleTrace,
)
from .constants import ManeuverConstants, SimulationConstants
from .geometry import project_to_image

logger = get_logger(__name__)

_EPS = SimulationConstants.TIME_EPSILON


class EgoPhase(StrEnum):
    """States of the scripted overtake"""

    CRUISE = "cruise"
    OUT = "out"
    RETURN = "return"
    RECOVER = "recover"


def _s_curve(x: float) -> float:
    """Logistic step on [0, 1] rescaled to hit 0 and 1 exactly, 0.5 at the midpoint"""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    k = SimulationConstants.LATERAL_STEEPNESS
    return 0.5 + 0.5 * math.tanh(k * (x - 0.5) / 2) / math.tanh(k / 4)


@dataclass(frozen=True)
class _Ramp:
    """Constant acceleration from step ``k`` until ``v_limit`` is reached"""

    k: int
    s: float
    v: float
    accel: float = 0.0
    v_limit: float | None = None

    def at(self, k: int, dt: float) -> tuple[float, float]:
        tau = (k - self.k) * dt
        if self.accel == 0 or self.v_limit is None:
            return self.s + self.v * tau, self.v
        tau_lim = max((self.v_limit - self.v) / self.accel, 0.0)
        if tau <= tau_lim:
            return self.s + self.v * tau + 0.5 * self.accel * tau**2, self.v + self.accel * tau
        s_lim = self.s + self.v * tau_lim + 0.5 * self.accel * tau_lim**2
        return s_lim + self.v_limit * (tau - tau_lim), self.v_limit


@dataclass(frozen=True)
class _Shift:
    """Lateral S-curve from ``d_from`` to ``d_to`` starting at step ``k``"""

    k: int
    d_from: float
    d_to: float
    duration: float

    def at(self, k: int, dt: float) -> float:
        x = (k - self.k) * dt / self.duration
        if x >= 1:
            return self.d_to
        return self.d_from + (self.d_to - self.d_from) * _s_curve(x)

    def done(self, k: int, dt: float) -> bool:
        return (k - self.k) * dt >= self.duration - _EPS


def _ramp_toward(k: int, s: float, v: float, target: float, up: float, down: float) -> _Ramp:
    if target > v:
        return _Ramp(k, s, v, up, target)
    if target < v:
        return _Ramp(k, s, v, -down, target)
    return _Ramp(k, s, v)


def profile_motion(vehicle: VehicleSpec, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form position and speed under the vehicle's acceleration profile

    Speeds never drop below zero; a braking vehicle stays stopped until the
    next segment. Oncoming vehicles move toward decreasing ``s``.
    """
    anchors = [(0.0, 0.0, vehicle.v0, 0.0)]
    for segment in vehicle.profile:
        start = max(segment.start, 0.0)
        t_a, x_a, v_a, a_a = anchors[-1]
        dx, v = _advance(v_a, a_a, np.array([start - t_a]))
        if start == t_a:
            anchors[-1] = (t_a, x_a, v_a, segment.acceleration)
        else:
            anchors.append((start, x_a + float(dx[0]), float(v[0]), segment.acceleration))

    times = np.array([anchor[0] for anchor in anchors])
    index = np.searchsorted(times, t, side="right") - 1
    distance = np.empty(len(t))
    speed = np.empty(len(t))
    for j, (t_a, x_a, v_a, a_a) in enumerate(anchors):
        mask = index == j
        if mask.any():
            dx, v = _advance(v_a, a_a, t[mask] - t_a)
            distance[mask] = x_a + dx
            speed[mask] = v
    sign = -1.0 if vehicle.direction is Direction.ONCOMING else 1.0
    return vehicle.s0 + sign * distance, speed


def _advance(v0: float, a: float, tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if a < 0:
        tau = np.minimum(tau, v0 / -a)
    return v0 * tau + 0.5 * a * tau**2, np.maximum(v0 + a * tau, 0.0)


@dataclass
class _ScriptEvents:
    trigger: int | None = None
    return_start: int | None = None
    recover_start: int | None = None
    home: float = 0.0
    a1: float = 0.0


def _check_collisions(
    ids: list[str], s: np.ndarray, d: np.ndarray, k: int, t: float
) -> CollisionReport | None:
    ds = np.abs(s[k][:, None] - s[k][None, :])
    dd = np.abs(d[k][:, None] - d[k][None, :])
    close = (ds < SimulationConstants.COLLISION_LONGITUDINAL_M) & (
        dd < SimulationConstants.COLLISION_LATERAL_M
    )
    pairs = np.argwhere(np.triu(close, k=1))
    if len(pairs) == 0:
        return None
    a, b = pairs[0]
    return CollisionReport(
        vehicle_a=ids[a],
        vehicle_b=ids[b],
        t=t,
        longitudinal_gap=float(ds[a, b]),
        lateral_gap=float(dd[a, b]),
    )


def _build_output(
    spec: ScenarioSpec,
    t: np.ndarray,
    ids: list[str],
    s: np.ndarray,
    d: np.ndarray,
    v: np.ndarray,
    n: int,
) -> SimOutput:
    traces = {
        vehicle.id: VehicleTrace(
            vehicle_id=vehicle.id,
            direction=vehicle.direction,
            t=t[:n].copy(),
            s=s[:n, j].copy(),
            d=d[:n, j].copy(),
            v=v[:n, j].copy(),
        )
        for j, vehicle in enumerate(spec.vehicles)
    }
    return SimOutput(spec=spec, t=t[:n].copy(), traces=traces)


def run_scenario(spec: ScenarioSpec) -> SimOutput:
    """Integrate a scenario and derive the ground truth of its scripted overtake

    Raises:
        CollisionError: two vehicles came within the collision envelope; the
            error carries the report and the output up to that sample
    """
    n = spec.n_samples
    dt = spec.dt
    t = np.arange(n) * dt
    ids = [vehicle.id for vehicle in spec.vehicles]

    s = np.empty((n, len(ids)))
    d = np.empty((n, len(ids)))
    v = np.empty((n, len(ids)))
    for j, vehicle in enumerate(spec.vehicles):
        s[:, j], v[:, j] = profile_motion(vehicle, t)
        d[:, j] = vehicle.lateral_start(spec.road)

    script = spec.ego_script
    events = _ScriptEvents()
    if script is not None:
        _run_script(spec, script, t, ids, s, d, v, events)

    for k in range(n):
        report = _check_collisions(ids, s, d, k, float(t[k]))
        if report is not None:
            logger.warning(
                f"Collision between '{report.vehicle_a}' and '{report.vehicle_b}' at t={report.t:.2f}s"
            )
            raise CollisionError(report, _build_output(spec, t, ids, s, d, v, k + 1))

    output = _build_output(spec, t, ids, s, d, v, n)
    if script is not None:
        output.ground_truth = _ground_truth(spec, script, output, events)
    logger.debug(f"Simulated {len(ids)} vehicles over {n} samples")
    return output


def _run_script(
    spec: ScenarioSpec,
    script: OvertakeScript,
    t: np.ndarray,
    ids: list[str],
    s: np.ndarray,
    d: np.ndarray,
    v: np.ndarray,
    events: _ScriptEvents,
) -> None:
    """Overwrite the ego column with the scripted overtake"""
    dt = spec.dt
    ego = spec.vehicle(spec.ego_id)
    ego_col = ids.index(spec.ego_id)
    lead_col = ids.index(script.lead_id)
    clear_col = ids.index(script.target_to_clear)
    target = (
        script.lateral_target
        if script.lateral_target is not None
        else spec.road.opposite_lane_center
    )

    phase = EgoPhase.CRUISE
    ramp = _Ramp(0, ego.s0, ego.v0)
    shift = _Shift(0, ego.lateral_start(spec.road), ego.lateral_start(spec.road), 1.0)
    for k in range(len(t)):
        s_k, v_k = ramp.at(k, dt)
        d_k = shift.at(k, dt)
        if phase is EgoPhase.CRUISE:
            gap = s[k, lead_col] - s_k
            if 0 < gap <= script.trigger_gap + _EPS:
                phase = EgoPhase.OUT
                events.trigger, events.home, events.a1 = k, d_k, v_k
                ramp = _ramp_toward(
                    k, s_k, v_k, script.peak_speed, script.acceleration, script.deceleration
                )
                shift = _Shift(k, d_k, target, script.lateral_duration)
                logger.debug(f"Overtake triggered at t={t[k]:.2f}s with gap {gap:.2f} m")
        elif phase is EgoPhase.OUT:
            ahead = s_k - s[k, clear_col] >= script.return_gap - _EPS
            aborted = (
                script.abort_after is not None
                and (k - events.trigger) * dt >= script.abort_after - _EPS
            )
            if ahead or aborted:
                phase = EgoPhase.RETURN
                events.return_start = k
                shift = _Shift(k, d_k, events.home, script.lateral_duration)
                logger.debug(f"Return started at t={t[k]:.2f}s ({'abort' if aborted and not ahead else 'clear'})")
        elif phase is EgoPhase.RETURN and shift.done(k, dt):
            phase = EgoPhase.RECOVER
            events.recover_start = k
            ramp = _ramp_toward(
                k, s_k, v_k, events.a1, script.acceleration, script.deceleration
            )
        s[k, ego_col], v[k, ego_col], d[k, ego_col] = s_k, v_k, d_k

    if events.trigger is None:
        logger.warning(f"Overtake of '{script.lead_id}' never triggered")


def _first_index(mask: np.ndarray, start: int) -> int | None:
    hits = np.flatnonzero(mask[start:])
    return int(start + hits[0]) if len(hits) else None


def _truth_record(
    spec: ScenarioSpec,
    script: OvertakeScript,
    output: SimOutput,
    phases: PhaseBoundaries,
    marks: tuple[int, int, int, int, int, int],
) -> ManeuverRecord:
    """Variables read straight off the simulated samples at the scripted events"""
    k0, k1, k2, k3, k4, k5 = marks
    t = output.t
    ego = output.ego
    lead = output.traces[script.lead_id]
    lane_width = spec.road.lane_width
    others = [
        trace for vehicle_id, trace in output.traces.items() if vehicle_id != spec.ego_id
    ]

    durations = [float(t[b] - t[a]) for a, b in zip(marks, marks[1:])]
    distances = [float(ego.s[b] - ego.s[a]) for a, b in zip(marks, marks[1:])]

    passed = sum(
        1
        for trace in others
        if trace.direction is Direction.WITH_EGO
        and trace.s[k0] > ego.s[k0]
        and trace.s[k5] <= ego.s[k5]
    )
    oncoming = [
        trace.s[k1] - ego.s[k1]
        for trace in others
        if trace.direction is Direction.ONCOMING and trace.s[k1] > ego.s[k1]
    ]
    ahead_of_lead = [
        trace.s[k1] - lead.s[k1]
        for trace in others
        if trace is not lead
        and trace.direction is Direction.WITH_EGO
        and -lane_width <= trace.d[k1] < 0
        and trace.s[k1] > lead.s[k1]
    ]
    clearance = (
        float(np.min(np.abs(ego.d[k2:k3] - lead.d[k2:k3])))
        if phases.intrusion and k3 > k2
        else None
    )
    m2 = float(ego.s[k4] - lead.s[k4])
    occupied = (ego.d[k0:k5] > 0) if phases.intrusion else np.zeros(k5 - k0, dtype=bool)

    return ManeuverRecord(
        ego_id=spec.ego_id,
        lead_id=script.lead_id,
        phases=phases,
        n_overtaken=passed,
        t_total=math.fsum(durations),
        tp=tuple(durations[:4]),
        period5_duration=durations[4],
        d_total=math.fsum(distances),
        dp=tuple(distances[:4]),
        period5_distance=distances[4],
        m1=float(lead.s[k0] - ego.s[k0]),
        m2=m2 if m2 >= 0 else None,
        m=clearance,
        m3=float(min(oncoming)) if oncoming else None,
        m4=float(min(ahead_of_lead)) if ahead_of_lead else None,
        a1=float(ego.v[k0]),
        a12=float(ego.v[k1]),
        a11=float(ego.v[k3]),
        dab=float(ego.v[k0] - lead.v[k0]) * ManeuverConstants.MS_TO_KMH,
        opposite_lane_time=float(np.sum(np.diff(t[k0 : k5 + 1])[occupied])),
    )


def _ground_truth(
    spec: ScenarioSpec,
    script: OvertakeScript,
    output: SimOutput,
    events: _ScriptEvents,
) -> GroundTruth | None:
    """Boundaries and variables from the script state and the raw samples"""
    if events.trigger is None or events.return_start is None:
        return None
    ego = output.ego
    lead = output.traces[script.lead_id]
    tol = settings.segmentation.recenter_tolerance
    k0 = events.trigger
    recentred = np.abs(ego.d - events.home) <= tol

    k1 = _first_index(ego.d > 0, k0 + 1)
    k4 = _first_index(recentred, events.return_start)
    k3 = _first_index(ego.d <= 0, k1 + 1) if k1 is not None else None
    if k4 is None or (k1 is not None and (k3 is None or k3 - k1 < 2)):
        logger.warning("Scripted overtake did not complete within the simulated duration")
        return None
    if k1 is None:
        k1 = k2 = k3 = k4
        intrusion = False
    else:
        passed = _first_index(ego.s[:k3] >= lead.s[:k3], k1 + 1)
        k2 = passed if passed is not None else k1 + 1 + int(np.argmax(ego.d[k1 + 1 : k3]))
        intrusion = True

    tolerance = settings.segmentation.speed_return_tolerance * events.a1
    k5 = _first_index(np.abs(ego.v - events.a1) <= tolerance, k4 + 1)
    if k5 is None:
        k5 = len(ego.t) - 1
        logger.warning("Ego speed never recovered, closing the maneuver at the last sample")

    t = ego.t
    try:
        phases = PhaseBoundaries(
            t0=float(t[k0]),
            t1=float(t[k1]),
            t2=float(t[k2]),
            t3=float(t[k3]),
            t4=float(t[k4]),
            t5=float(t[k5]),
            intrusion=intrusion,
        )
        record = _truth_record(spec, script, output, phases, (k0, k1, k2, k3, k4, k5))
    except ValidationError as e:
        logger.warning(f"No ground truth for this run: {e}")
        return None
    return GroundTruth(phases=phases, record=record)


def run_scenarios(specs: Sequence[ScenarioSpec], max_workers: int | None = None) -> list[SimOutput]:
    """Run independent scenarios in parallel, results in input order"""
    with ThreadPoolExecutor(max_workers=max_workers or settings.max_workers) as pool:
        return list(pool.map(run_scenario, specs))


def render_observations(
    sim: SimOutput, camera: CameraModel, visibility: float | None = None
) -> list[RenderedObservation]:
    """Camera observations of every vehicle ahead of the ego within ``visibility``"""
    visibility = visibility if visibility is not None else settings.simulation.visibility_range
    ego = sim.ego
    observations = []
    for k, t_k in enumerate(ego.t):
        for trace in sim.others():
            if k >= len(trace.t):
                continue
            z = float(trace.s[k] - ego.s[k])
            if not 0 < z <= visibility:
                continue
            image = project_to_image(camera, z, float(trace.d[k] - ego.d[k]), float(t_k))
            observations.append(
                RenderedObservation(
                    t=float(t_k), vehicle_id=trace.vehicle_id, y_f=image.y_f, x_offset=image.x_offset
                )
            )
    logger.debug(f"Rendered {len(observations)} observations")
    return observations


def add_gps_noise(
    traces: Mapping[str, VehicleTrace],
    sigma_pos: float,
    sigma_speed: float,
    seed: int | None = None,
) -> dict[str, VehicleTrace]:
    """Independent zero-mean Gaussian noise on s, d and v of every sample"""
    for name, sigma in (("sigma_pos", sigma_pos), ("sigma_speed", sigma_speed)):
        if not math.isfinite(sigma) or sigma < 0:
            raise DomainError(name, sigma, "noise level must be finite and >= 0")
    rng = np.random.default_rng(seed)
    noisy = {}
    for vehicle_id, trace in traces.items():
        n = len(trace)
        s = trace.s + rng.normal(0.0, sigma_pos, n) if sigma_pos > 0 else trace.s.copy()
        d = trace.d + rng.normal(0.0, sigma_pos, n) if sigma_pos > 0 else trace.d.copy()
        v = trace.v + rng.normal(0.0, sigma_speed, n) if sigma_speed > 0 else trace.v.copy()
        noisy[vehicle_id] = trace.with_values(s=s, d=d, v=v)
    return noisy


def default_overtake_spec(seed: int | None = None) -> ScenarioSpec:
    """Motorcycle passing a slower car with an oncoming car and a bike ahead

    The scripted overtake spends about 4 s beyond the centre line.
    """
    return ScenarioSpec(
        road=RoadGeometry(),
        vehicles=(
            VehicleSpec(id=SimulationConstants.EGO_ID, s0=0.0, v0=12.0),
            VehicleSpec(id="car1", s0=40.0, v0=8.0),
            VehicleSpec(id="car2", direction=Direction.ONCOMING, s0=400.0, v0=15.0),
            VehicleSpec(id="bike2", s0=70.0, v0=12.0),
        ),
        ego_script=OvertakeScript(lead_id="car1"),
        dt=0.1,
        duration=20.0,
        seed=seed,
    )
