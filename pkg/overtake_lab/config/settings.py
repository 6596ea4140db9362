"""Configuration management with Pydantic v2 settings style"""

from pathlib import Path

from pydantic import AliasChoices, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class FitSettings(BaseSettings):
    """Maximum-likelihood fitting configuration"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    tolerance: float = Field(
        default=1e-8, validation_alias=AliasChoices("OVERTAKE_FIT_TOLERANCE")
    )
    max_iterations: int = Field(
        default=500, validation_alias=AliasChoices("OVERTAKE_FIT_MAX_ITER")
    )
    analytic_gradient: bool = Field(
        default=True, validation_alias=AliasChoices("OVERTAKE_FIT_ANALYTIC_GRADIENT")
    )

    @field_validator("tolerance")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        """Validate gradient tolerance"""
        if v <= 0:
            raise ValueError("Tolerance must be positive")
        return v

    @field_validator("max_iterations")
    @classmethod
    def validate_max_iterations(cls, v: int) -> int:
        """Validate iteration cap"""
        if v <= 0:
            raise ValueError("Max iterations must be positive")
        return v


class SegmentationSettings(BaseSettings):
    """Thresholds used to split a trace into the five overtaking periods"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    lateral_velocity_threshold: float = Field(
        default=0.1, validation_alias=AliasChoices("OVERTAKE_SEG_LATERAL_VELOCITY")
    )
    sustain_duration: float = Field(
        default=0.3, validation_alias=AliasChoices("OVERTAKE_SEG_SUSTAIN")
    )
    acceleration_threshold: float = Field(
        default=0.1, validation_alias=AliasChoices("OVERTAKE_SEG_ACCELERATION")
    )
    crossing_hysteresis: float = Field(
        default=0.2, validation_alias=AliasChoices("OVERTAKE_SEG_HYSTERESIS")
    )
    recenter_tolerance: float = Field(
        default=0.05, validation_alias=AliasChoices("OVERTAKE_SEG_RECENTER_TOL")
    )
    speed_return_tolerance: float = Field(
        default=0.05, validation_alias=AliasChoices("OVERTAKE_SEG_SPEED_RETURN_TOL")
    )
    smoothing_window: int | None = Field(
        default=None, validation_alias=AliasChoices("OVERTAKE_SEG_SMOOTHING_WINDOW")
    )
    noise_floor: float = Field(
        default=0.05, validation_alias=AliasChoices("OVERTAKE_SEG_NOISE_FLOOR")
    )
    noise_window: int = Field(
        default=31, validation_alias=AliasChoices("OVERTAKE_SEG_NOISE_WINDOW")
    )

    @field_validator(
        "lateral_velocity_threshold",
        "sustain_duration",
        "acceleration_threshold",
        "recenter_tolerance",
        "speed_return_tolerance",
        "noise_floor",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate positive thresholds"""
        if v <= 0:
            raise ValueError("Value must be positive")
        return v

    @field_validator("crossing_hysteresis")
    @classmethod
    def validate_hysteresis(cls, v: float) -> float:
        """Validate crossing hysteresis"""
        if v < 0:
            raise ValueError("Hysteresis cannot be negative")
        return v

    @field_validator("smoothing_window", "noise_window")
    @classmethod
    def validate_window(cls, v: int | None) -> int | None:
        """Savitzky-Golay windows must be odd and longer than the polynomial"""
        if v is None:
            return v
        if v < 5 or v % 2 == 0:
            raise ValueError("Smoothing window must be an odd integer >= 5")
        return v


class AvoidanceSettings(BaseSettings):
    """Collision-avoidance decision thresholds"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    time_threshold: float = Field(
        default=6.5, validation_alias=AliasChoices("OVERTAKE_TIME_THRESHOLD")
    )
    distance_threshold: float = Field(
        default=115.0, validation_alias=AliasChoices("OVERTAKE_DISTANCE_THRESHOLD")
    )
    risk_tolerance: float = Field(
        default=0.05, validation_alias=AliasChoices("OVERTAKE_RISK_TOLERANCE")
    )
    time_margin: float = Field(
        default=1.2, validation_alias=AliasChoices("OVERTAKE_TIME_MARGIN")
    )
    target_return_gap: float = Field(
        default=7.0, validation_alias=AliasChoices("OVERTAKE_TARGET_RETURN_GAP")
    )
    platoon_window: float = Field(
        default=30.0, validation_alias=AliasChoices("OVERTAKE_PLATOON_WINDOW")
    )

    @field_validator(
        "time_threshold",
        "distance_threshold",
        "time_margin",
        "target_return_gap",
        "platoon_window",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate positive values"""
        if v <= 0:
            raise ValueError("Value must be positive")
        return v

    @field_validator("risk_tolerance")
    @classmethod
    def validate_risk(cls, v: float) -> float:
        """Validate risk tolerance as an open-interval probability"""
        if not 0 < v < 1:
            raise ValueError("Risk tolerance must lie in (0, 1)")
        return v


class SimulationSettings(BaseSettings):
    """Scenario simulator defaults"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    visibility_range: float = Field(
        default=60.0, validation_alias=AliasChoices("OVERTAKE_SIM_VISIBILITY")
    )

    @field_validator("visibility_range")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate positive values"""
        if v <= 0:
            raise ValueError("Value must be positive")
        return v


class LoggingSettings(BaseSettings):
    """Logging configuration"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    level: str = Field(default="INFO", validation_alias=AliasChoices("LOG_LEVEL"))
    file: Path | None = Field(default=None, validation_alias=AliasChoices("LOG_FILE"))

    @field_validator("level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {valid_levels}")
        return v.upper()


class AppSettings(BaseSettings):
    """Main application settings"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    fit: FitSettings = Field(default_factory=FitSettings)
    segmentation: SegmentationSettings = Field(default_factory=SegmentationSettings)
    avoidance: AvoidanceSettings = Field(default_factory=AvoidanceSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    seed: int | None = Field(
        default=None, validation_alias=AliasChoices("OVERTAKE_LAB_SEED")
    )
    max_workers: int = Field(
        default=4, validation_alias=AliasChoices("OVERTAKE_MAX_WORKERS", "MAX_WORKERS")
    )

    @field_validator("max_workers")
    @classmethod
    def validate_max_workers(cls, v: int) -> int:
        """Validate max workers"""
        if v <= 0 or v > 32:
            raise ValueError("Max workers must be between 1 and 32")
        return v

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v: int | None) -> int | None:
        """Seeds feed numpy generators, which reject negatives"""
        if v is not None and v < 0:
            raise ValueError("Seed cannot be negative")
        return v


# Global settings instance
settings = AppSettings()
