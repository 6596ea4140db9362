"""Pydantic models for camera geometry and calibration data"""

import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class CameraModel(BaseModel):
    """Flat-ground pinhole camera mounted at the front of the motorcycle"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    c: float = Field(alias="c_px", description="Focal constant in pixels")
    y1: float = Field(alias="y1_m", description="Mounting height above ground in meters")
    y_g: float = Field(default=0.0, alias="y_g_px", description="Horizon row in pixels")

    @field_validator("c", "y1")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Focal constant and height are positive"""
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Camera constants must be finite and > 0")
        return v

    @field_validator("y_g")
    @classmethod
    def validate_horizon(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("Horizon row must be finite")
        return v

    def to_document(self) -> dict[str, float]:
        """Camera file layout"""
        return {"c_px": self.c, "y1_m": self.y1, "y_g_px": self.y_g}


class ImageObservation(BaseModel):
    """Pixel coordinates of a target's ground contact point"""

    model_config = ConfigDict(frozen=True)

    y_f: float = Field(description="Pixel row of the ground contact")
    x_offset: float = Field(default=0.0, description="Signed column offset from centre")
    t: float = Field(default=0.0, description="Timestamp in seconds")

    @field_validator("y_f", "x_offset", "t")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("Pixel coordinates must be finite")
        return v


class CalibrationPoint(BaseModel):
    """One reading of a target placed at a measured distance"""

    model_config = ConfigDict(frozen=True)

    session: int = Field(description="Calibration session index")
    measured: float = Field(description="Tape-measured distance in meters")
    observation: ImageObservation

    @field_validator("measured")
    @classmethod
    def validate_measured(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Measured distance must be > 0")
        return v


class CalibrationSet(BaseModel):
    """Calibration readings grouped by session

    Every session must observe the same targets the same number of times so
    the readings form an n × p grid per target.
    """

    model_config = ConfigDict(frozen=True)

    points: tuple[CalibrationPoint, ...] = Field(description="All readings")

    @model_validator(mode="after")
    def validate_grid(self) -> "CalibrationSet":
        """Sessions share targets and repetition counts"""
        if not self.points:
            raise ValueError("Calibration set cannot be empty")
        layouts = {
            session: sorted(p.measured for p in self.points if p.session == session)
            for session in self.sessions
        }
        first = next(iter(layouts.values()))
        if any(layout != first for layout in layouts.values()):
            raise ValueError("Every session must observe the same targets")
        return self

    @property
    def sessions(self) -> list[int]:
        return sorted({p.session for p in self.points})

    @property
    def n(self) -> int:
        """Number of sessions"""
        return len(self.sessions)

    @property
    def p(self) -> int:
        """Readings per session"""
        return len(self.points) // self.n

    def measured_for(self, session: int) -> list[float]:
        return [p.measured for p in self.points if p.session == session]

    def observations_for(self, session: int) -> list[ImageObservation]:
        return [p.observation for p in self.points if p.session == session]


class RenderedObservation(BaseModel):
    """Image observation of one vehicle seen from the ego camera"""

    model_config = ConfigDict(frozen=True)

    t: float = Field(description="Timestamp in seconds")
    vehicle_id: str = Field(description="Observed vehicle")
    y_f: float = Field(description="Pixel row of the ground contact")
    x_offset: float = Field(description="Signed column offset from centre")

    def as_image_observation(self) -> ImageObservation:
        return ImageObservation(y_f=self.y_f, x_offset=self.x_offset, t=self.t)
