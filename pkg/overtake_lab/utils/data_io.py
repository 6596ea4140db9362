"""CSV and JSON readers and writers for traces, observations and inputs"""

import json
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from ..core.constants import FitConstants, GeometryConstants, ManeuverConstants
from ..exceptions import (
    DataFileError,
    ModelParseError,
    ObservationDataError,
    SnapshotValidationError,
)
from ..logging_config import get_logger
from ..models.geometry_models import (
    CalibrationPoint,
    CalibrationSet,
    CameraModel,
    ImageObservation,
    RenderedObservation,
)
from ..models.scenario_models import ScenarioSpec
from ..models.survival_models import CovariateVector, DurationObservation
from ..models.trace_models import Direction, ManeuverRecord, VehicleTrace
from ..models.traffic_models import TrafficSnapshot

logger = get_logger(__name__)

RENDERED_COLUMNS: tuple[str, ...] = ("t_s", "vehicle_id", "y_f_px", "x_offset_px")


def load_json(path: str | Path) -> Any:
    """Parse a JSON file, reporting the location of syntax errors"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataFileError(str(path), f"cannot read file: {e}") from e
    if not text.strip():
        raise ModelParseError(str(path), "file is empty", line=1, column=1)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(str(path), e.msg, line=e.lineno, column=e.colno) from e


def write_json(data: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
        f.write("\n")


def _read_csv(path: str | Path, columns: Sequence[str], text_columns: Sequence[str] = ()) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path,
            float_precision="round_trip",
            dtype={column: str for column in text_columns},
        )
    except FileNotFoundError as e:
        raise DataFileError(str(path), "file not found") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFileError(str(path), f"cannot parse CSV: {e}") from e
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise DataFileError(str(path), f"missing columns: {', '.join(missing)}")
    numeric = [column for column in columns if column not in text_columns]
    for column in numeric:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            raise DataFileError(str(path), f"column '{column}' is not numeric")
    bad_rows = frame[list(columns)].isna().any(axis=1)
    if bad_rows.any():
        raise DataFileError(str(path), "empty cell", row=int(np.flatnonzero(bad_rows)[0]) + 1)
    return frame


# Traces


def traces_to_frame(traces: Iterable[VehicleTrace]) -> pd.DataFrame:
    """Long-format frame, one row per vehicle sample"""
    frames = [
        pd.DataFrame(
            {
                "t_s": trace.t,
                "vehicle_id": trace.vehicle_id,
                "direction": trace.direction.value,
                "s_m": trace.s,
                "d_m": trace.d,
                "v_mps": trace.v,
            }
        )
        for trace in traces
    ]
    if not frames:
        return pd.DataFrame(columns=list(ManeuverConstants.TRACE_COLUMNS))
    return pd.concat(frames, ignore_index=True)


def write_traces(traces: Mapping[str, VehicleTrace] | Iterable[VehicleTrace], path: str | Path) -> None:
    items = traces.values() if isinstance(traces, Mapping) else traces
    frame = traces_to_frame(items)
    frame.to_csv(path, index=False)
    logger.debug(f"Wrote {len(frame)} trace rows to {path}")


def frame_to_traces(frame: pd.DataFrame, source: str = "<frame>") -> dict[str, VehicleTrace]:
    traces: dict[str, VehicleTrace] = {}
    for vehicle_id, group in frame.groupby("vehicle_id", sort=False):
        directions = group["direction"].unique()
        if len(directions) != 1:
            raise DataFileError(source, f"vehicle '{vehicle_id}' has several directions")
        try:
            direction = Direction(directions[0])
        except ValueError as e:
            raise DataFileError(source, f"unknown direction '{directions[0]}'") from e
        group = group.sort_values("t_s", kind="stable")
        try:
            traces[str(vehicle_id)] = VehicleTrace(
                vehicle_id=str(vehicle_id),
                direction=direction,
                t=group["t_s"].to_numpy(dtype=float),
                s=group["s_m"].to_numpy(dtype=float),
                d=group["d_m"].to_numpy(dtype=float),
                v=group["v_mps"].to_numpy(dtype=float),
            )
        except ValueError as e:
            raise DataFileError(source, str(e)) from e
    return traces


def read_traces(path: str | Path) -> dict[str, VehicleTrace]:
    """Trace CSV ``t_s,vehicle_id,direction,s_m,d_m,v_mps`` keyed by vehicle"""
    frame = _read_csv(path, ManeuverConstants.TRACE_COLUMNS, text_columns=("vehicle_id", "direction"))
    traces = frame_to_traces(frame, str(path))
    logger.debug(f"Read {len(traces)} traces from {path}")
    return traces


# Duration observations


def read_observations(path: str | Path) -> list[DurationObservation]:
    """Observation CSV ``duration_s,ud_m,pd_m,dab_kmh,multiple``"""
    frame = _read_csv(path, FitConstants.OBSERVATION_COLUMNS)
    observations = []
    for index, row in enumerate(frame.itertuples(index=False)):
        multiple = float(row.multiple)
        try:
            observations.append(
                DurationObservation(
                    duration=float(row.duration_s),
                    covariates=CovariateVector(
                        ud=float(row.ud_m),
                        pd=float(row.pd_m),
                        dab=float(row.dab_kmh),
                        multiple=int(multiple) if multiple.is_integer() else multiple,
                    ),
                )
            )
        except ValidationError as e:
            raise ObservationDataError(index, row.duration_s, e.errors()[0]["msg"]) from e
    logger.debug(f"Read {len(observations)} observations from {path}")
    return observations


def write_observations(observations: Sequence[DurationObservation], path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "duration_s": [o.duration for o in observations],
            "ud_m": [o.covariates.ud for o in observations],
            "pd_m": [o.covariates.pd for o in observations],
            "dab_kmh": [o.covariates.dab for o in observations],
            "multiple": [o.covariates.multiple for o in observations],
        },
        columns=list(FitConstants.OBSERVATION_COLUMNS),
    )
    frame.to_csv(path, index=False)


# Camera and calibration


def read_camera(path: str | Path) -> CameraModel:
    """Camera JSON ``{"c_px": ..., "y1_m": ..., "y_g_px": ...}``"""
    data = load_json(path)
    try:
        return CameraModel.model_validate(data)
    except ValidationError as e:
        raise DataFileError(str(path), f"invalid camera: {e.errors()[0]['msg']}") from e


def write_camera(camera: CameraModel, path: str | Path) -> None:
    write_json(camera.to_document(), path)


def read_calibration(path: str | Path) -> CalibrationSet:
    """Calibration CSV ``session,target_m,y_f_px,x_offset_px``"""
    frame = _read_csv(path, GeometryConstants.CALIBRATION_COLUMNS)
    try:
        points = tuple(
            CalibrationPoint(
                session=int(row.session),
                measured=float(row.target_m),
                observation=ImageObservation(y_f=float(row.y_f_px), x_offset=float(row.x_offset_px)),
            )
            for row in frame.itertuples(index=False)
        )
        return CalibrationSet(points=points)
    except ValidationError as e:
        raise DataFileError(str(path), e.errors()[0]["msg"]) from e


# Rendered observations


def write_rendered(observations: Sequence[RenderedObservation], path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "t_s": [o.t for o in observations],
            "vehicle_id": [o.vehicle_id for o in observations],
            "y_f_px": [o.y_f for o in observations],
            "x_offset_px": [o.x_offset for o in observations],
        },
        columns=list(RENDERED_COLUMNS),
    )
    frame.to_csv(path, index=False)


def read_rendered(path: str | Path) -> list[RenderedObservation]:
    frame = _read_csv(path, RENDERED_COLUMNS, text_columns=("vehicle_id",))
    return [
        RenderedObservation(
            t=float(row.t_s),
            vehicle_id=str(row.vehicle_id),
            y_f=float(row.y_f_px),
            x_offset=float(row.x_offset_px),
        )
        for row in frame.itertuples(index=False)
    ]


# Snapshots, scenarios and records


def parse_snapshot(data: Any) -> TrafficSnapshot:
    """Validate a snapshot document, never falling back to defaults"""
    try:
        return TrafficSnapshot.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise SnapshotValidationError(
            f"{location}: {first['msg']}" if location else first["msg"],
            errors=[f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()],
        ) from e


def read_snapshot(path: str | Path) -> TrafficSnapshot:
    return parse_snapshot(load_json(path))


def read_snapshots(path: str | Path) -> list[TrafficSnapshot]:
    """A single snapshot object or a list of them"""
    data = load_json(path)
    items = data if isinstance(data, list) else [data]
    return [parse_snapshot(item) for item in items]


def read_scenario(path: str | Path) -> ScenarioSpec:
    data = load_json(path)
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise DataFileError(str(path), f"invalid scenario at '{location}': {first['msg']}") from e


def write_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    write_json(spec.model_dump(mode="json"), path)


def dump_models(items: Iterable[BaseModel]) -> list[dict[str, Any]]:
    return [item.model_dump(mode="json") for item in items]


def write_records(records: Sequence[ManeuverRecord], path: str | Path) -> None:
    """Maneuver records as a JSON list, nulls for absent values"""
    write_json(dump_models(records), path)


def read_records(path: str | Path) -> list[ManeuverRecord]:
    data = load_json(path)
    if not isinstance(data, list):
        raise DataFileError(str(path), "expected a JSON list of maneuver records")
    try:
        return [ManeuverRecord.model_validate(item) for item in data]
    except ValidationError as e:
        raise DataFileError(str(path), e.errors()[0]["msg"]) from e
