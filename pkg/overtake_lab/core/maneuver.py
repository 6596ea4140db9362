"""Segmentation of overtaking maneuvers and extraction of their variables

Traces live in road coordinates: ``s`` along the road axis, ``d`` signed
from the centre line (own lane negative). Other vehicles are interpolated
onto the ego clock, so boundaries are always ego sample timestamps.
"""

import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.signal import savgol_coeffs, savgol_filter
from scipy.stats import median_abs_deviation

from ..config.settings import SegmentationSettings, settings
from ..exceptions import (
    NoManeuverError,
    ObservationDataError,
    OvertakeLabError,
    PhaseTraceMismatchError,
)
from ..logging_config import get_logger
from ..models.survival_models import CovariateVector, DurationObservation
from ..models.trace_models import (
    BatchExtractionResult,
    Direction,
    ManeuverRecord,
    PhaseBoundaries,
    RoadGeometry,
    VehicleTrace,
)
from ..utils.data_io import read_traces
from ..utils.error_handler import ErrorCollector, handle_errors
from .constants import ManeuverConstants, SimulationConstants

logger = get_logger(__name__)

_EPS = SimulationConstants.TIME_EPSILON

SUMMARY_VARIABLES: tuple[str, ...] = (
    "n_overtaken",
    "t_total",
    "tp1",
    "tp2",
    "tp3",
    "tp4",
    "period5_duration",
    "d_total",
    "dp1",
    "dp2",
    "dp3",
    "dp4",
    "period5_distance",
    "m1",
    "m2",
    "m",
    "m3",
    "m4",
    "a1",
    "a12",
    "a11",
    "dab",
    "opposite_lane_time",
)


def _at(values: np.ndarray) -> float:
    return float(np.asarray(values).ravel()[0])


def _in_own_lane(d: float, road: RoadGeometry) -> bool:
    return -road.lane_width <= d < 0


def _covers(trace: VehicleTrace, t: float) -> bool:
    return trace.t[0] - _EPS <= t <= trace.t[-1] + _EPS


def find_lead(
    ego: VehicleTrace,
    traces: Mapping[str, VehicleTrace] | Sequence[VehicleTrace],
    road: RoadGeometry | None = None,
) -> VehicleTrace:
    """Nearest same-direction vehicle ahead in the ego lane at the first ego sample"""
    road = road or RoadGeometry()
    items = traces.values() if isinstance(traces, Mapping) else traces
    t_start = float(ego.t[0])
    s_ego = float(ego.s[0])
    best: tuple[float, VehicleTrace] | None = None
    for trace in items:
        if trace.vehicle_id == ego.vehicle_id or trace.direction is not Direction.WITH_EGO:
            continue
        if not _covers(trace, t_start):
            continue
        gap = _at(trace.position_at(t_start)) - s_ego
        if gap <= 0 or not _in_own_lane(_at(trace.lateral_at(t_start)), road):
            continue
        if best is None or gap < best[0]:
            best = (gap, trace)
    if best is None:
        raise NoManeuverError("no lead vehicle ahead in the ego lane", ego.vehicle_id)
    logger.debug(f"Lead of '{ego.vehicle_id}' is '{best[1].vehicle_id}' at {best[0]:.2f} m")
    return best[1]


def sample_noise(values: np.ndarray) -> float:
    """Per-sample noise level of a channel, robust to the maneuver itself

    White noise of level σ gives second differences of level σ·√6; their
    median absolute deviation ignores the few samples bent by lane changes
    and speed ramps, so clean traces report exactly zero.
    """
    if len(values) < 3:
        return 0.0
    second = np.diff(values, n=2)
    return float(median_abs_deviation(second, scale="normal") / math.sqrt(6.0))


def _denoise(values: np.ndarray, config: SegmentationSettings) -> tuple[np.ndarray, float]:
    """Channel ready for boundary tests and the noise level left in it

    An explicit ``smoothing_window`` always applies. Otherwise a channel is
    smoothed with ``noise_window`` only when its noise exceeds ``noise_floor``.
    """
    sigma = sample_noise(values)
    window = config.smoothing_window
    if window is None and sigma > config.noise_floor:
        window = config.noise_window
    if window is None or len(values) < window:
        return values, sigma
    polyorder = ManeuverConstants.SAVGOL_POLYORDER
    gain = float(np.linalg.norm(savgol_coeffs(window, polyorder)))
    logger.debug(f"Smoothing channel with window {window} (noise {sigma:.3f})")
    return savgol_filter(values, window, polyorder), sigma * gain


def _sustained(mask: np.ndarray, t: np.ndarray, start: int, hold: float) -> int | None:
    """First index >= start where ``mask`` stays true for ``hold`` seconds

    Near the end of the trace the window is clipped to the samples left.
    """
    ends = np.searchsorted(t, t + hold + _EPS, side="right")
    for i in range(start, len(t)):
        if mask[i] and mask[i : ends[i]].all():
            return i
    return None


def _first(mask: np.ndarray, start: int) -> int | None:
    hits = np.flatnonzero(mask[start:])
    return int(start + hits[0]) if len(hits) else None


def _find_trigger(
    t: np.ndarray, vd: np.ndarray, acc: np.ndarray, ahead: np.ndarray, config: SegmentationSettings
) -> int | None:
    ends = np.searchsorted(t, t + config.sustain_duration + _EPS, side="right") - 1
    moving = vd > config.lateral_velocity_threshold
    for i in range(len(t)):
        j = ends[i]
        if t[j] - t[i] < config.sustain_duration - _EPS:
            break
        if ahead[i] and acc[i] > config.acceleration_threshold and moving[i : j + 1].all():
            return i
    return None


def segment_phases(
    ego: VehicleTrace,
    lead: VehicleTrace,
    road: RoadGeometry | None = None,
    config: SegmentationSettings | None = None,
) -> PhaseBoundaries:
    """Split the ego trace into the five overtaking periods

    Raises:
        NoManeuverError: no lead ahead, no trigger, or the maneuver never completes
        PhaseTraceMismatchError: the two traces do not overlap in time
    """
    config = config or settings.segmentation
    road = road or RoadGeometry()
    t = ego.t
    if len(t) < 3:
        raise NoManeuverError("trace too short to segment", ego.vehicle_id)
    if lead.t[-1] < t[0] or lead.t[0] > t[-1]:
        raise PhaseTraceMismatchError(
            f"lead '{lead.vehicle_id}' and ego '{ego.vehicle_id}' do not overlap in time"
        )

    lead_s = lead.position_at(t)
    ahead = lead_s > ego.s
    if not ahead.any():
        raise NoManeuverError(f"'{lead.vehicle_id}' is never ahead of the ego", ego.vehicle_id)

    d, d_noise = _denoise(ego.d, config)
    v, _ = _denoise(ego.v, config)
    vd = np.gradient(d, t)
    acc = np.gradient(v, t)

    i0 = _find_trigger(t, vd, acc, ahead, config)
    if i0 is None:
        raise NoManeuverError("no sustained move toward the centre line", ego.vehicle_id)
    home = float(np.median(ego.d[: i0 + 1]))
    if not _in_own_lane(home, road):
        raise NoManeuverError(f"ego starts outside its lane (d={home:.2f} m)", ego.vehicle_id)
    # re-centring band widens with the noise left in d
    tol = max(config.recenter_tolerance, ManeuverConstants.NOISE_BAND * d_noise)
    hold = config.crossing_hysteresis
    logger.debug(f"Trigger at t={t[i0]:.3f}s, home lateral {home:.3f} m")

    i1 = _sustained(d > 0, t, i0 + 1, hold)
    i3 = _sustained(d <= 0, t, i1 + 1, hold) if i1 is not None else None

    if i1 is None or i3 is None:
        if i1 is not None:
            raise NoManeuverError("ego never returned across the centre line", ego.vehicle_id)
        off_home = np.abs(d - home) > tol
        leave = _first(off_home, i0 + 1)
        if leave is None:
            raise NoManeuverError("lateral excursion stays within tolerance", ego.vehicle_id)
        back = _first(~off_home, leave + 1)
        if back is None:
            raise NoManeuverError("ego never re-centred in its lane", ego.vehicle_id)
        i1 = i2 = i3 = i4 = back
        intrusion = False
    else:
        if i3 - i1 < 2:
            raise NoManeuverError("excursion too short to separate the pass", ego.vehicle_id)
        passed = _first(ego.s[i1 + 1 : i3] >= lead_s[i1 + 1 : i3], 0)
        if passed is None:
            i2 = i1 + 1 + int(np.argmax(d[i1 + 1 : i3]))
            logger.debug("Lead not passed in the opposite lane, using peak excursion")
        else:
            i2 = i1 + 1 + passed
        i4 = _first(np.abs(d - home) <= tol, i3 + 1)
        if i4 is None:
            raise NoManeuverError("ego never re-centred in its lane", ego.vehicle_id)
        intrusion = True

    a1 = v[i0]
    recovered = _first(np.abs(v - a1) <= config.speed_return_tolerance * a1, i4 + 1)
    if recovered is None:
        recovered = len(t) - 1
        logger.warning(
            f"Speed of '{ego.vehicle_id}' never returned to {a1:.2f} m/s, "
            f"closing period 5 at the last sample"
        )
    if recovered <= i4:
        raise NoManeuverError("trace ends before the recovery period", ego.vehicle_id)

    phases = PhaseBoundaries(
        t0=float(t[i0]),
        t1=float(t[i1]),
        t2=float(t[i2]),
        t3=float(t[i3]),
        t4=float(t[i4]),
        t5=float(t[recovered]),
        intrusion=intrusion,
    )
    logger.debug(f"Boundaries {phases.as_tuple()} (intrusion={intrusion})")
    return phases


def opposite_lane_occupancy(phases: PhaseBoundaries, ego: VehicleTrace) -> float:
    """Seconds spent beyond the centre line during the maneuver"""
    if not phases.intrusion or len(ego.t) < 2:
        return 0.0
    t = ego.t
    intervals = np.diff(t)
    inside = (t[:-1] >= phases.t0 - _EPS) & (t[:-1] < phases.t5 - _EPS) & (ego.d[:-1] > 0)
    return float(np.sum(intervals[inside]))


def count_overtaken(
    traces: Mapping[str, VehicleTrace], phases: PhaseBoundaries, ego_id: str
) -> int:
    """Same-direction vehicles ahead at the start and not ahead at the end"""
    ego = traces[ego_id]
    s_start = _at(ego.position_at(phases.t0))
    s_end = _at(ego.position_at(phases.t5))
    count = 0
    for vehicle_id, trace in traces.items():
        if vehicle_id == ego_id or trace.direction is not Direction.WITH_EGO:
            continue
        ahead_before = _at(trace.position_at(phases.t0)) > s_start
        ahead_after = _at(trace.position_at(phases.t5)) > s_end
        if ahead_before and not ahead_after:
            count += 1
    return count


def _nearest_gap(
    traces: Mapping[str, VehicleTrace],
    exclude: set[str],
    direction: Direction,
    reference: float,
    t: float,
    road: RoadGeometry | None = None,
) -> float | None:
    gaps = []
    for vehicle_id, trace in traces.items():
        if vehicle_id in exclude or trace.direction is not direction or not _covers(trace, t):
            continue
        if road is not None and not _in_own_lane(_at(trace.lateral_at(t)), road):
            continue
        gap = _at(trace.position_at(t)) - reference
        if gap > 0:
            gaps.append(gap)
    return min(gaps) if gaps else None


def extract_variables(
    traces: Mapping[str, VehicleTrace],
    phases: PhaseBoundaries,
    road: RoadGeometry | None = None,
    ego_id: str = SimulationConstants.EGO_ID,
    lead_id: str | None = None,
) -> ManeuverRecord:
    """Variables of one segmented maneuver

    Optional gaps (m2, m, m3, m4) are None when the vehicle or situation
    they describe is absent.
    """
    road = road or RoadGeometry()
    for vehicle_id in (ego_id, lead_id):
        if vehicle_id is not None and vehicle_id not in traces:
            raise PhaseTraceMismatchError(f"trace '{vehicle_id}' missing")
    ego = traces[ego_id]
    lead = traces[lead_id] if lead_id is not None else find_lead(ego, traces, road)
    if phases.t0 < ego.t[0] - _EPS or phases.t5 > ego.t[-1] + _EPS:
        raise PhaseTraceMismatchError(
            f"boundaries [{phases.t0}, {phases.t5}] outside ego trace "
            f"[{ego.t[0]}, {ego.t[-1]}]"
        )

    times = phases.as_tuple()
    s_ego = ego.position_at(np.array(times))
    v_ego = ego.speed_at(np.array(times))
    s_lead = lead.position_at(np.array(times))

    steps = np.diff(s_ego)
    if np.any(steps < -_EPS):
        raise PhaseTraceMismatchError("ego moves backwards inside the maneuver")
    steps = np.maximum(steps, 0.0)
    durations = phases.durations()

    m1 = float(s_lead[0] - s_ego[0])
    if m1 < 0:
        raise PhaseTraceMismatchError(f"lead '{lead.vehicle_id}' is behind the ego at t0")
    m2 = float(s_ego[4] - s_lead[4])

    mutual = None
    if phases.intrusion:
        window = (ego.t >= phases.t2 - _EPS) & (ego.t < phases.t3 - _EPS)
        if window.any():
            lateral = np.abs(ego.d[window] - lead.lateral_at(ego.t[window]))
            mutual = float(lateral.min())

    s_ego_t1 = float(s_ego[1])
    s_lead_t1 = float(s_lead[1])
    a1 = float(v_ego[0])
    v_lead_t0 = _at(lead.speed_at(phases.t0))
    tp = tuple(float(d) for d in durations[:4])
    dp = tuple(float(d) for d in steps[:4])

    record = ManeuverRecord(
        ego_id=ego.vehicle_id,
        lead_id=lead.vehicle_id,
        phases=phases,
        n_overtaken=count_overtaken(traces, phases, ego.vehicle_id),
        t_total=math.fsum(durations),
        tp=tp,
        period5_duration=float(durations[4]),
        d_total=math.fsum(steps),
        dp=dp,
        period5_distance=float(steps[4]),
        m1=m1,
        m2=m2 if m2 >= 0 else None,
        m=mutual,
        m3=_nearest_gap(traces, {ego.vehicle_id}, Direction.ONCOMING, s_ego_t1, phases.t1),
        m4=_nearest_gap(
            traces,
            {ego.vehicle_id, lead.vehicle_id},
            Direction.WITH_EGO,
            s_lead_t1,
            phases.t1,
            road=road,
        ),
        a1=a1,
        a12=float(v_ego[1]),
        a11=float(v_ego[3]),
        dab=(a1 - v_lead_t0) * ManeuverConstants.MS_TO_KMH,
        opposite_lane_time=opposite_lane_occupancy(phases, ego),
    )
    return record


def extract_maneuver(
    traces: Mapping[str, VehicleTrace],
    ego_id: str = SimulationConstants.EGO_ID,
    road: RoadGeometry | None = None,
    config: SegmentationSettings | None = None,
    lead_id: str | None = None,
) -> ManeuverRecord:
    """Find the lead, segment the ego trace and extract the record"""
    if ego_id not in traces:
        raise NoManeuverError(f"no trace for ego '{ego_id}'", ego_id)
    road = road or RoadGeometry()
    for trace in traces.values():
        if not road.contains(trace):
            logger.warning(f"Trace '{trace.vehicle_id}' leaves the {road.half_width:g} m half-width")
    ego = traces[ego_id]
    lead = traces[lead_id] if lead_id is not None else find_lead(ego, traces, road)
    phases = segment_phases(ego, lead, road, config)
    return extract_variables(traces, phases, road, ego_id=ego_id, lead_id=lead.vehicle_id)


def records_frame(records: Sequence[ManeuverRecord]) -> pd.DataFrame:
    """One row per record, one column per variable"""
    rows = []
    for record in records:
        row = {name: getattr(record, name, None) for name in SUMMARY_VARIABLES}
        for i in range(4):
            row[f"tp{i + 1}"] = record.tp[i]
            row[f"dp{i + 1}"] = record.dp[i]
        rows.append(row)
    return pd.DataFrame(rows, columns=list(SUMMARY_VARIABLES), dtype=float)


def summarize_records(records: Sequence[ManeuverRecord]) -> pd.DataFrame:
    """Per-variable N, mean and standard deviation, absent values skipped"""
    frame = records_frame(records)
    summary = frame.agg(["count", "mean", "std"]).T
    summary.columns = ["N", "mean", "std"]
    summary["N"] = summary["N"].astype(int)
    summary.index.name = "variable"
    return summary


def to_observation(record: ManeuverRecord, index: int = 0) -> DurationObservation:
    """Duration and covariates of an intrusive maneuver for model fitting"""
    if not record.intrusion:
        raise ObservationDataError(index, record.t_total, "maneuver without intrusion")
    if record.n_overtaken == 0:
        raise ObservationDataError(index, record.t_total, "no vehicle was overtaken")
    if record.m2 is None:
        raise ObservationDataError(index, record.t_total, "ego ended behind the lead")
    return DurationObservation(
        duration=record.t_total,
        covariates=CovariateVector(
            ud=record.m2, pd=record.m1, dab=record.dab, multiple=record.multiple
        ),
    )


@dataclass
class ExtractionResult:
    """Outcome of extracting one trace file"""

    source: str
    success: bool
    record: ManeuverRecord | None = None
    error: str | None = None


class ManeuverBatch:
    """Extracts maneuvers from many trace files on a thread pool"""

    def __init__(
        self,
        ego_id: str = SimulationConstants.EGO_ID,
        road: RoadGeometry | None = None,
        config: SegmentationSettings | None = None,
        max_workers: int | None = None,
    ):
        self.ego_id = ego_id
        self.road = road or RoadGeometry()
        self.config = config or settings.segmentation
        self.max_workers = max_workers or settings.max_workers
        self._stats = {"files": 0, "maneuvers": 0, "intrusive": 0, "failures": 0}

    def process_traces(
        self, traces: Mapping[str, VehicleTrace], source: str = "<traces>"
    ) -> ExtractionResult:
        """Extract one maneuver, turning failures into a result"""
        try:
            record = extract_maneuver(traces, self.ego_id, self.road, self.config)
            return ExtractionResult(source=source, success=True, record=record)
        except NoManeuverError as e:
            return ExtractionResult(source=source, success=False, error=e.message)
        except OvertakeLabError as e:
            return ExtractionResult(source=source, success=False, error=str(e))
        except Exception as e:
            logger.error(f"Unexpected error extracting {source}: {e}")
            return ExtractionResult(source=source, success=False, error=f"Unexpected error: {e}")

    def process_file(self, path: str | Path) -> ExtractionResult:
        try:
            traces = read_traces(path)
        except OvertakeLabError as e:
            return ExtractionResult(source=str(path), success=False, error=str(e))
        return self.process_traces(traces, str(path))

    def process_files(self, paths: Sequence[str | Path]) -> BatchExtractionResult:
        """Extract every file, keeping input order in the output"""
        logger.info(f"Extracting maneuvers from {len(paths)} trace files...")
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            results = list(pool.map(self.process_file, paths))
        return self.collect(results)

    def collect(self, results: list[ExtractionResult]) -> BatchExtractionResult:
        collector = ErrorCollector()
        records = []
        for result in results:
            self._stats["files"] += 1
            if result.success and result.record is not None:
                records.append(result.record)
                self._stats["maneuvers"] += 1
                self._stats["intrusive"] += int(result.record.intrusion)
                logger.info(f"  ✅ {result.source}: {result.record.t_total:.2f} s")
            else:
                self._stats["failures"] += 1
                logger.warning(f"  ❌ {result.source}: {result.error}")
                collector.add_error(OvertakeLabError(result.error or "unknown error"), result.source)
        if collector.has_errors():
            collector.log_all(logger)
        return BatchExtractionResult(
            total_processed=len(results),
            successful=len(records),
            failed=len(results) - len(records),
            records=records,
            errors=collector.messages(),
        )

    @handle_errors(default_return=False, log_level=logging.WARNING, operation_name="write_summary")
    def write_summary(self, records: Sequence[ManeuverRecord], path: str | Path) -> bool:
        """Write the per-variable summary table next to the records"""
        summarize_records(records).to_csv(path)
        return True

    def get_statistics(self) -> dict[str, int]:
        return dict(self._stats)
