"""Vehicle traces, road layout, phase boundaries and maneuver records"""

import math
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.constants import ManeuverConstants


class Direction(StrEnum):
    """Travel direction relative to the ego motorcycle"""

    WITH_EGO = "with_ego"
    ONCOMING = "oncoming"


@dataclass(frozen=True, eq=False)
class VehicleTrace:
    """Column-oriented time series of one vehicle"""

    vehicle_id: str
    direction: Direction
    t: np.ndarray
    s: np.ndarray
    d: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        for name in ("t", "s", "d", "v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        lengths = {len(self.t), len(self.s), len(self.d), len(self.v)}
        if len(lengths) != 1:
            raise ValueError(f"Trace '{self.vehicle_id}' has columns of unequal length")
        if len(self.t) == 0:
            raise ValueError(f"Trace '{self.vehicle_id}' is empty")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError(
                f"Timestamps of trace '{self.vehicle_id}' must be strictly increasing"
            )

    def __len__(self) -> int:
        return len(self.t)

    def position_at(self, times: np.ndarray | float) -> np.ndarray:
        """Longitudinal position on another clock

        Linear interpolation inside the trace, constant-speed extrapolation
        with the boundary speed outside it.
        """
        query = np.atleast_1d(np.asarray(times, dtype=float))
        result = np.interp(query, self.t, self.s)
        sign = -1.0 if self.direction is Direction.ONCOMING else 1.0
        before = query < self.t[0]
        after = query > self.t[-1]
        result[before] = self.s[0] + sign * self.v[0] * (query[before] - self.t[0])
        result[after] = self.s[-1] + sign * self.v[-1] * (query[after] - self.t[-1])
        return result

    def lateral_at(self, times: np.ndarray | float) -> np.ndarray:
        return np.interp(np.atleast_1d(np.asarray(times, dtype=float)), self.t, self.d)

    def speed_at(self, times: np.ndarray | float) -> np.ndarray:
        return np.interp(np.atleast_1d(np.asarray(times, dtype=float)), self.t, self.v)

    def shifted(self, offset: float) -> "VehicleTrace":
        """Copy with every timestamp moved by ``offset`` seconds"""
        return VehicleTrace(
            vehicle_id=self.vehicle_id,
            direction=self.direction,
            t=self.t + offset,
            s=self.s.copy(),
            d=self.d.copy(),
            v=self.v.copy(),
        )

    def with_values(
        self, s: np.ndarray | None = None, d: np.ndarray | None = None, v: np.ndarray | None = None
    ) -> "VehicleTrace":
        """Copy with some columns replaced"""
        return VehicleTrace(
            vehicle_id=self.vehicle_id,
            direction=self.direction,
            t=self.t.copy(),
            s=self.s.copy() if s is None else s,
            d=self.d.copy() if d is None else d,
            v=self.v.copy() if v is None else v,
        )


class RoadGeometry(BaseModel):
    """Straight two-lane road centred on the centre line"""

    model_config = ConfigDict(frozen=True)

    lane_width: float = Field(default=ManeuverConstants.DEFAULT_LANE_WIDTH, description="m")
    num_lanes: int = Field(default=ManeuverConstants.NUM_LANES)

    @field_validator("lane_width")
    @classmethod
    def validate_lane_width(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Lane width must be > 0")
        return v

    @field_validator("num_lanes")
    @classmethod
    def validate_num_lanes(cls, v: int) -> int:
        """Only two-lane roads are modelled"""
        if v != ManeuverConstants.NUM_LANES:
            raise ValueError("Only two-lane roads are supported")
        return v

    @property
    def half_width(self) -> float:
        return self.lane_width * self.num_lanes / 2

    @property
    def own_lane_center(self) -> float:
        return -self.lane_width / 2

    @property
    def opposite_lane_center(self) -> float:
        return self.lane_width / 2

    def contains(self, trace: VehicleTrace) -> bool:
        """Every lateral offset lies on the road"""
        return bool(np.all(np.abs(trace.d) <= self.half_width + 1e-9))


class PhaseBoundaries(BaseModel):
    """Start times of the five overtaking periods plus the end of the last

    Period i covers [t_{i-1}, t_i). Without intrusion periods 2 to 4 are
    empty and t1 = t2 = t3 = t4.
    """

    model_config = ConfigDict(frozen=True)

    t0: float = Field(description="Period 1 start: rider begins the maneuver")
    t1: float = Field(description="Period 2 start: first centre-line crossing")
    t2: float = Field(description="Period 3 start: ego passes the lead vehicle")
    t3: float = Field(description="Period 4 start: return crossing")
    t4: float = Field(description="Period 5 start: ego re-centred in its lane")
    t5: float = Field(description="Period 5 end: speed back to pre-maneuver level")
    intrusion: bool = Field(description="Opposite lane was occupied")

    @model_validator(mode="after")
    def validate_order(self) -> "PhaseBoundaries":
        """Boundaries are ordered; only non-intrusive maneuvers have empty periods"""
        times = self.as_tuple()
        if not all(math.isfinite(t) for t in times):
            raise ValueError("Boundaries must be finite")
        if not (self.t0 < self.t1 and self.t4 < self.t5):
            raise ValueError("Periods 1 and 5 must be non-empty")
        if not (self.t1 <= self.t2 <= self.t3 <= self.t4):
            raise ValueError("Boundaries must be non-decreasing")
        if self.intrusion and not (self.t1 < self.t2 < self.t3 < self.t4):
            raise ValueError("Intrusive maneuvers need non-empty periods 2 to 4")
        if not self.intrusion and not (self.t1 == self.t2 == self.t3 == self.t4):
            raise ValueError("Non-intrusive maneuvers have empty periods 2 to 4")
        return self

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.t0, self.t1, self.t2, self.t3, self.t4, self.t5)

    def durations(self) -> tuple[float, float, float, float, float]:
        """Durations of periods 1 to 5"""
        times = self.as_tuple()
        return (
            times[1] - times[0],
            times[2] - times[1],
            times[3] - times[2],
            times[4] - times[3],
            times[5] - times[4],
        )

    def period_of(self, t: float) -> int | None:
        """Period number containing ``t``, None outside the maneuver"""
        times = self.as_tuple()
        for period in range(5):
            if times[period] <= t < times[period + 1]:
                return period + 1
        return None

    def shifted(self, offset: float) -> "PhaseBoundaries":
        return PhaseBoundaries(
            t0=self.t0 + offset,
            t1=self.t1 + offset,
            t2=self.t2 + offset,
            t3=self.t3 + offset,
            t4=self.t4 + offset,
            t5=self.t5 + offset,
            intrusion=self.intrusion,
        )


class ManeuverRecord(BaseModel):
    """Variables of one overtaking maneuver"""

    model_config = ConfigDict(frozen=True)

    ego_id: str = Field(description="Overtaking vehicle")
    lead_id: str = Field(description="Overtaken vehicle ahead in the ego lane")
    phases: PhaseBoundaries
    n_overtaken: int = Field(description="Same-direction vehicles passed (N)")
    t_total: float = Field(description="Total maneuver duration, s")
    tp: tuple[float, float, float, float] = Field(description="TP1..TP4, s")
    period5_duration: float = Field(description="Speed-recovery period, s")
    d_total: float = Field(description="Distance covered by ego, m")
    dp: tuple[float, float, float, float] = Field(description="DP1..DP4, m")
    period5_distance: float = Field(description="Distance in the recovery period, m")
    m1: float = Field(description="Primary distance ego to lead at period 1 start, m")
    m2: float | None = Field(
        default=None, description="Ultimate distance lead to ego at period 4 end, m"
    )
    m: float | None = Field(
        default=None, description="Minimum lateral clearance to lead during period 3, m"
    )
    m3: float | None = Field(
        default=None, description="Gap to the oncoming vehicle at period 2 start, m"
    )
    m4: float | None = Field(
        default=None, description="Gap lead to the next vehicle ahead at period 2 start, m"
    )
    a1: float = Field(description="Ego speed at period 1 start, m/s")
    a12: float = Field(description="Ego speed at the first crossing, m/s")
    a11: float = Field(description="Ego speed at the return crossing, m/s")
    dab: float = Field(description="(a1 - lead speed) at period 1 start, km/h")
    opposite_lane_time: float = Field(description="Time spent beyond the centre line, s")

    @field_validator("m1", "m2", "m", "m3", "m4", "d_total", "period5_distance")
    @classmethod
    def validate_distance(cls, v: float | None) -> float | None:
        if v is not None and v < 0:
            raise ValueError("Distances cannot be negative")
        return v

    @model_validator(mode="after")
    def validate_totals(self) -> "ManeuverRecord":
        """Totals are the sums of their periods"""
        if not math.isclose(
            self.t_total, sum(self.tp) + self.period5_duration, rel_tol=0, abs_tol=1e-9
        ):
            raise ValueError("t_total must equal the sum of the period durations")
        if not math.isclose(
            self.d_total, sum(self.dp) + self.period5_distance, rel_tol=0, abs_tol=1e-6
        ):
            raise ValueError("d_total must equal the sum of the period distances")
        if any(d < 0 for d in self.dp):
            raise ValueError("Period distances cannot be negative")
        if self.opposite_lane_time > self.t_total + 1e-9:
            raise ValueError("Opposite-lane time cannot exceed the maneuver")
        return self

    @property
    def intrusion(self) -> bool:
        return self.phases.intrusion

    @property
    def multiple(self) -> int:
        """Covariate indicator, more than one vehicle passed"""
        return int(self.n_overtaken > 1)


@dataclass
class BatchExtractionResult:
    """Result of extracting maneuvers from many trace files"""

    total_processed: int
    successful: int
    failed: int
    records: list[ManeuverRecord]
    errors: list[str] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        """Calculate success rate percentage"""
        if self.total_processed == 0:
            return 0.0
        return (self.successful / self.total_processed) * 100
