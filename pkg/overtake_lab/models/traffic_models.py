"""Traffic snapshot and decision models for the collision-avoidance engine"""

import math
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config.settings import AvoidanceSettings
from .survival_models import CovariateVector


def _finite_non_negative(v: float) -> float:
    if not math.isfinite(v) or v < 0:
        raise ValueError("must be finite and >= 0")
    return v


class EgoState(BaseModel):
    """Position and speed of the overtaking motorcycle"""

    model_config = ConfigDict(frozen=True)

    position: float = Field(default=0.0, description="Longitudinal position, m")
    speed: float = Field(description="Speed, m/s")

    @field_validator("speed")
    @classmethod
    def validate_speed(cls, v: float) -> float:
        return _finite_non_negative(v)


class GapState(BaseModel):
    """A neighbouring vehicle described by its gap and its own speed"""

    model_config = ConfigDict(frozen=True)

    gap: float = Field(description="Gap along the road axis, m")
    speed: float = Field(description="Speed in the vehicle's own direction frame, m/s")

    @field_validator("gap", "speed")
    @classmethod
    def validate_values(cls, v: float) -> float:
        return _finite_non_negative(v)


class TrafficSnapshot(BaseModel):
    """Instantaneous state around the ego motorcycle

    ``lead`` is the vehicle ahead in the ego lane (gap M1), ``oncoming`` the
    approaching car in the opposite lane (gap M3, speed toward the ego) and
    ``follower_of_lead`` the next same-direction vehicle ahead of the lead
    (gap M4 measured from the lead). ``platoon`` lists gaps of further
    vehicles ahead of the lead.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    timestamp: float = Field(default=0.0, description="Seconds")
    ego: EgoState
    lead: GapState
    oncoming: GapState | None = None
    follower_of_lead: GapState | None = None
    platoon: tuple[float, ...] = Field(
        default=(), description="Gaps from the lead to further vehicles ahead, m"
    )

    @field_validator("timestamp")
    @classmethod
    def validate_timestamp(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("Timestamp must be finite")
        return v

    @field_validator("platoon")
    @classmethod
    def validate_platoon(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        return tuple(_finite_non_negative(gap) for gap in v)


class DecisionConfig(BaseModel):
    """Thresholds of the decision rules"""

    model_config = ConfigDict(frozen=True)

    time_threshold: float = Field(default=6.5, description="s")
    distance_threshold: float = Field(default=115.0, description="m")
    risk_tolerance: float = Field(default=0.05, description="Probability")
    time_margin: float = Field(default=1.2, description="Multiplier on predicted time")
    target_return_gap: float = Field(default=7.0, description="ud covariate, m")
    platoon_window: float = Field(default=30.0, description="m ahead of the lead")

    @field_validator(
        "time_threshold",
        "distance_threshold",
        "time_margin",
        "target_return_gap",
        "platoon_window",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Value must be positive")
        return v

    @field_validator("risk_tolerance")
    @classmethod
    def validate_risk(cls, v: float) -> float:
        if not 0 < v < 1:
            raise ValueError("Risk tolerance must lie in (0, 1)")
        return v

    @classmethod
    def from_settings(cls, avoidance: AvoidanceSettings) -> "DecisionConfig":
        return cls(
            time_threshold=avoidance.time_threshold,
            distance_threshold=avoidance.distance_threshold,
            risk_tolerance=avoidance.risk_tolerance,
            time_margin=avoidance.time_margin,
            target_return_gap=avoidance.target_return_gap,
            platoon_window=avoidance.platoon_window,
        )


class Verdict(StrEnum):
    SAFE = "Safe"
    UNSAFE = "Unsafe"


class Decision(BaseModel):
    """Advisory with its diagnostics"""

    model_config = ConfigDict(frozen=True)

    verdict: Verdict
    reasons: list[str] = Field(default_factory=list, description="Triggered rules")
    t_pred: float = Field(description="Predicted overtaking duration, s")
    t_avail: float | None = Field(
        description="Time until the oncoming vehicle arrives, None when unbounded"
    )
    risk: float = Field(description="Probability the maneuver outlasts t_avail")
    timestamp: float = Field(default=0.0)
    covariates: CovariateVector

    @model_validator(mode="after")
    def validate_verdict(self) -> "Decision":
        """Unsafe exactly when a rule fired"""
        if (self.verdict is Verdict.UNSAFE) != bool(self.reasons):
            raise ValueError("Verdict must be Unsafe iff reasons are present")
        return self

    @property
    def is_safe(self) -> bool:
        return self.verdict is Verdict.SAFE
