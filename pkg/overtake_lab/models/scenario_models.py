"""Scenario description and simulator output models"""

import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.constants import SimulationConstants
from .trace_models import Direction, ManeuverRecord, PhaseBoundaries, RoadGeometry, VehicleTrace


class AccelerationSegment(BaseModel):
    """Constant acceleration applied from ``start`` until the next segment"""

    model_config = ConfigDict(frozen=True)

    start: float = Field(description="Segment start time, s")
    acceleration: float = Field(description="m/s^2, negative to brake")

    @field_validator("start", "acceleration")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("Segment values must be finite")
        return v


class VehicleSpec(BaseModel):
    """Initial state and speed profile of one point-mass vehicle"""

    model_config = ConfigDict(frozen=True)

    id: str = Field(description="Unique vehicle identifier")
    direction: Direction = Field(default=Direction.WITH_EGO)
    s0: float = Field(default=0.0, description="Initial longitudinal position, m")
    d0: float | None = Field(
        default=None, description="Initial lateral offset, lane centre when omitted"
    )
    v0: float = Field(default=0.0, description="Initial speed in its own direction, m/s")
    profile: tuple[AccelerationSegment, ...] = Field(default=())

    @field_validator("id")
    @classmethod
    def validate_id(cls, v: str) -> str:
        if not v or not v.strip():
            raise ValueError("Vehicle id cannot be empty")
        return v.strip()

    @field_validator("v0")
    @classmethod
    def validate_speed(cls, v: float) -> float:
        if not math.isfinite(v) or v < 0:
            raise ValueError("Initial speed must be finite and >= 0")
        return v

    @field_validator("profile")
    @classmethod
    def validate_profile(
        cls, v: tuple[AccelerationSegment, ...]
    ) -> tuple[AccelerationSegment, ...]:
        """Segments are sorted by start time"""
        starts = [segment.start for segment in v]
        if starts != sorted(starts):
            raise ValueError("Profile segments must be ordered by start time")
        return v

    def lateral_start(self, road: RoadGeometry) -> float:
        if self.d0 is not None:
            return self.d0
        if self.direction is Direction.ONCOMING:
            return road.opposite_lane_center
        return road.own_lane_center


class OvertakeScript(BaseModel):
    """Scripted overtake of the ego vehicle

    The ego cruises until the gap to ``lead_id`` drops to ``trigger_gap``,
    then accelerates to ``peak_speed`` while moving to ``lateral_target``.
    Once it is ``return_gap`` ahead of the vehicle to clear (or after
    ``abort_after`` seconds) it moves back to its lane and brakes to its
    pre-maneuver speed.
    """

    model_config = ConfigDict(frozen=True)

    lead_id: str = Field(description="Vehicle whose gap triggers the maneuver")
    clear_vehicle_id: str | None = Field(
        default=None, description="Last vehicle to pass, the lead when omitted"
    )
    trigger_gap: float = Field(default=20.0, description="m")
    peak_speed: float = Field(default=16.0, description="m/s")
    acceleration: float = Field(default=1.5, description="m/s^2")
    deceleration: float = Field(default=1.5, description="m/s^2")
    lateral_duration: float = Field(default=2.0, description="Lane transition time, s")
    lateral_target: float | None = Field(
        default=None, description="Lateral offset to reach, opposite lane centre when omitted"
    )
    return_gap: float = Field(default=7.0, description="Clearance ahead before returning, m")
    abort_after: float | None = Field(
        default=None, description="Return after this many seconds regardless of position"
    )

    @field_validator(
        "trigger_gap", "peak_speed", "acceleration", "deceleration", "lateral_duration"
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Value must be positive")
        return v

    @field_validator("return_gap")
    @classmethod
    def validate_return_gap(cls, v: float) -> float:
        if not math.isfinite(v) or v < 0:
            raise ValueError("Return gap cannot be negative")
        return v

    @field_validator("abort_after")
    @classmethod
    def validate_abort(cls, v: float | None) -> float | None:
        if v is not None and v <= 0:
            raise ValueError("abort_after must be positive")
        return v

    @property
    def target_to_clear(self) -> str:
        return self.clear_vehicle_id or self.lead_id


class ScenarioSpec(BaseModel):
    """Complete description of one simulation run"""

    model_config = ConfigDict(frozen=True)

    road: RoadGeometry = Field(default_factory=RoadGeometry)
    vehicles: tuple[VehicleSpec, ...]
    ego_id: str = Field(default=SimulationConstants.EGO_ID)
    ego_script: OvertakeScript | None = None
    dt: float = Field(default=0.1, description="Sample period, s")
    duration: float = Field(default=20.0, description="Simulated time, s")
    seed: int | None = Field(default=None, description="Seed for GPS noise")

    @field_validator("dt", "duration")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Value must be positive")
        return v

    @model_validator(mode="after")
    def validate_vehicles(self) -> "ScenarioSpec":
        """Ids are unique and scripted vehicles exist"""
        ids = [vehicle.id for vehicle in self.vehicles]
        if len(set(ids)) != len(ids):
            raise ValueError("Vehicle ids must be unique")
        if self.ego_id not in ids:
            raise ValueError(f"Ego vehicle '{self.ego_id}' is not defined")
        if self.ego_script is not None:
            for ref in (self.ego_script.lead_id, self.ego_script.target_to_clear):
                if ref not in ids or ref == self.ego_id:
                    raise ValueError(f"Script refers to unknown vehicle '{ref}'")
        if self.duration < self.dt:
            raise ValueError("Duration must cover at least one sample interval")
        return self

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9)) + 1

    def vehicle(self, vehicle_id: str) -> VehicleSpec:
        for vehicle in self.vehicles:
            if vehicle.id == vehicle_id:
                return vehicle
        raise KeyError(vehicle_id)


class CollisionReport(BaseModel):
    """Where and when two point masses came too close"""

    model_config = ConfigDict(frozen=True)

    vehicle_a: str
    vehicle_b: str
    t: float = Field(description="Sample time of the collision, s")
    longitudinal_gap: float = Field(description="|s_a - s_b|, m")
    lateral_gap: float = Field(description="|d_a - d_b|, m")


@dataclass
class GroundTruth:
    """Phases and variables known to the simulator"""

    phases: PhaseBoundaries
    record: ManeuverRecord


@dataclass
class SimOutput:
    """Traces on a common clock plus the ground truth of a scripted run"""

    spec: ScenarioSpec
    t: np.ndarray
    traces: dict[str, VehicleTrace] = field(default_factory=dict)
    ground_truth: GroundTruth | None = None

    @property
    def ego(self) -> VehicleTrace:
        return self.traces[self.spec.ego_id]

    def others(self) -> list[VehicleTrace]:
        return [trace for vid, trace in self.traces.items() if vid != self.spec.ego_id]
