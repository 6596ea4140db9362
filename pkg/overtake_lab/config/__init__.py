"""Configuration module for the overtaking analysis toolkit"""

from .settings import (
    AppSettings,
    AvoidanceSettings,
    FitSettings,
    LoggingSettings,
    SegmentationSettings,
    SimulationSettings,
    settings,
)

__all__ = [
    "AppSettings",
    "AvoidanceSettings",
    "FitSettings",
    "LoggingSettings",
    "SegmentationSettings",
    "SimulationSettings",
    "settings",
]
