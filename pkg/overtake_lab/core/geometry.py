"""Monocular distance recovery, gap-differenced speeds and calibration error"""

from collections.abc import Mapping, Sequence

import numpy as np

from ..exceptions import DomainError, HorizonError, ShapeMismatchError
from ..logging_config import get_logger
from ..models.geometry_models import CalibrationSet, CameraModel, ImageObservation, RenderedObservation
from ..models.trace_models import Direction, VehicleTrace

logger = get_logger(__name__)


def longitudinal_distance(camera: CameraModel, obs: ImageObservation) -> float:
    """Flat-ground pinhole range Z = c·y1 / (y_f - y_g)"""
    if obs.y_f <= camera.y_g:
        raise HorizonError(obs.y_f, camera.y_g)
    return camera.c * camera.y1 / (obs.y_f - camera.y_g)


def _check_depth(z: float) -> None:
    if not np.isfinite(z) or z <= 0:
        raise DomainError("Z", z, "depth must be finite and > 0")


def lateral_offset(camera: CameraModel, obs: ImageObservation, z: float) -> float:
    """Signed lateral offset of a target at depth ``z``, positive toward the opposite lane"""
    _check_depth(z)
    return obs.x_offset * z / camera.c


def mutual_lateral_distance(
    camera: CameraModel, obs_a: ImageObservation, obs_b: ImageObservation, z: float
) -> float:
    """ΔX = |x_a - x_b| · Z / c"""
    _check_depth(z)
    return abs(obs_a.x_offset - obs_b.x_offset) * z / camera.c


def project_to_image(
    camera: CameraModel, z: float, lateral: float = 0.0, t: float = 0.0
) -> ImageObservation:
    """Pixel coordinates of a ground point ``z`` ahead and ``lateral`` aside"""
    _check_depth(z)
    return ImageObservation(
        y_f=camera.y_g + camera.c * camera.y1 / z,
        x_offset=camera.c * lateral / z,
        t=t,
    )


def width_based_distance(camera: CameraModel, pixel_width: float, object_width: float) -> float:
    """Range from the apparent width of an object of known size, Z = c·W / w"""
    if not np.isfinite(pixel_width) or pixel_width <= 0:
        raise DomainError("pixel_width", pixel_width, "must be > 0")
    if not np.isfinite(object_width) or object_width <= 0:
        raise DomainError("object_width", object_width, "must be > 0")
    return camera.c * object_width / pixel_width


def _check_dt(dt: float) -> None:
    if not np.isfinite(dt) or dt <= 0:
        raise DomainError("dt", dt, "sample interval must be > 0")


def adjacent_vehicle_speed(
    ego_speed_prev: float, ego_speed_now: float, gap_prev: float, gap_now: float, dt: float
) -> float:
    """Speed of a vehicle ahead from the ego speed and the change in gap

    B = (A(t-1) + A(t)) / 2 + (Z(t) - Z(t-1)) / Δt
    """
    _check_dt(dt)
    return (ego_speed_prev + ego_speed_now) / 2 + (gap_now - gap_prev) / dt


def oncoming_vehicle_speed(
    ego_speed_prev: float, ego_speed_now: float, gap_prev: float, gap_now: float, dt: float
) -> float:
    """Speed of an approaching vehicle in its own direction frame

    The gap closes at A + D, so D = -((A(t-1) + A(t)) / 2 + ΔZ / Δt).
    """
    return -adjacent_vehicle_speed(ego_speed_prev, ego_speed_now, gap_prev, gap_now, dt)


def mape(
    calculated: Sequence[Sequence[float]] | np.ndarray,
    measured: Sequence[float] | Sequence[Sequence[float]] | np.ndarray,
) -> float:
    """Mean absolute percentage error over n sessions × p repetitions

    ``measured`` is either one value per repetition shared by all sessions
    or a full n × p grid. The percentage is averaged over repetitions first,
    then over sessions.
    """
    calc = np.atleast_2d(np.asarray(calculated, dtype=float))
    meas = np.asarray(measured, dtype=float)
    if meas.ndim == 1:
        if meas.shape[0] != calc.shape[1]:
            raise ShapeMismatchError("mape", f"{calc.shape[1]} measured values", meas.shape[0])
        meas = np.broadcast_to(meas, calc.shape)
    elif meas.shape != calc.shape:
        raise ShapeMismatchError("mape", calc.shape, meas.shape)
    if calc.size == 0:
        raise ShapeMismatchError("mape", "at least one reading", calc.shape)
    if np.any(meas <= 0):
        raise DomainError("measured", meas.min(), "measured distances must be > 0")
    per_session = 100 * np.mean(np.abs(calc - meas) / meas, axis=1)
    return float(np.mean(per_session))


def calibration_mape(camera: CameraModel, calibration: CalibrationSet) -> float:
    """MAPE of the pinhole ranges over a calibration file"""
    calculated = []
    measured = []
    for session in calibration.sessions:
        observations = calibration.observations_for(session)
        calculated.append([longitudinal_distance(camera, obs) for obs in observations])
        measured.append(calibration.measured_for(session))
    error = mape(calculated, measured)
    logger.info(
        f"Calibration MAPE over {calibration.n} sessions × {calibration.p} readings: {error:.3f}%"
    )
    return error


def reconstruct_traces(
    ego: VehicleTrace,
    observations: Sequence[RenderedObservation],
    camera: CameraModel,
    directions: Mapping[str, Direction] | None = None,
) -> dict[str, VehicleTrace]:
    """Rebuild other vehicles' traces from camera observations and the ego trace

    s = s_ego + Z and d = d_ego + lateral offset; speeds come from gap
    differencing between consecutive observations. The first observation of
    a vehicle reuses the speed of the interval that follows it. Vehicles seen
    only once are dropped.
    """
    directions = directions or {}
    by_vehicle: dict[str, list[RenderedObservation]] = {}
    for obs in observations:
        by_vehicle.setdefault(obs.vehicle_id, []).append(obs)

    traces: dict[str, VehicleTrace] = {}
    for vehicle_id in sorted(by_vehicle):
        rows = sorted(by_vehicle[vehicle_id], key=lambda obs: obs.t)
        if len(rows) < 2:
            logger.debug(f"Vehicle '{vehicle_id}' observed once, no speed available")
            continue
        direction = directions.get(vehicle_id, Direction.WITH_EGO)
        times = np.array([obs.t for obs in rows])
        gaps = np.array(
            [longitudinal_distance(camera, obs.as_image_observation()) for obs in rows]
        )
        offsets = np.array(
            [lateral_offset(camera, obs.as_image_observation(), z) for obs, z in zip(rows, gaps, strict=True)]
        )
        ego_s = ego.position_at(times)
        ego_d = ego.lateral_at(times)
        ego_v = ego.speed_at(times)

        speed_fn = oncoming_vehicle_speed if direction is Direction.ONCOMING else adjacent_vehicle_speed
        speeds = np.empty(len(rows))
        for k in range(1, len(rows)):
            speeds[k] = speed_fn(
                ego_v[k - 1], ego_v[k], gaps[k - 1], gaps[k], times[k] - times[k - 1]
            )
        speeds[0] = speeds[1]

        traces[vehicle_id] = VehicleTrace(
            vehicle_id=vehicle_id,
            direction=direction,
            t=times,
            s=ego_s + gaps,
            d=ego_d + offsets,
            v=speeds,
        )
    logger.debug(f"Reconstructed {len(traces)} traces from {len(observations)} observations")
    return traces
