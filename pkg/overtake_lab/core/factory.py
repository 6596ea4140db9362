"""Factory functions for creating configured instances"""

from pathlib import Path

from pydantic import ValidationError

from ..config.settings import AvoidanceSettings, settings
from ..exceptions import ConfigurationError
from ..logging_config import get_logger
from ..models.survival_models import LogLogisticAft
from ..models.traffic_models import DecisionConfig
from ..utils.model_io import load_model
from .avoidance import CollisionAvoidanceEngine
from .constants import SurvivalConstants
from .survival import reference_model

logger = get_logger(__name__)


def resolve_model(spec: str | Path) -> LogLogisticAft:
    """A model file path, or the name of the built-in coefficient table"""
    if str(spec) == SurvivalConstants.REFERENCE_MODEL_NAME:
        logger.debug("Using the built-in reference coefficient table")
        return reference_model()
    return load_model(spec)


def create_decision_config(
    avoidance: AvoidanceSettings | None = None,
    time_threshold: float | None = None,
    distance_threshold: float | None = None,
) -> DecisionConfig:
    """Thresholds from settings with optional command-line overrides"""
    config = DecisionConfig.from_settings(avoidance or settings.avoidance)
    overrides = {
        name: value
        for name, value in (
            ("time_threshold", time_threshold),
            ("distance_threshold", distance_threshold),
        )
        if value is not None
    }
    if overrides:
        try:
            config = DecisionConfig.model_validate({**config.model_dump(), **overrides})
        except ValidationError as e:
            first = e.errors()[0]
            setting = str(first["loc"][0]) if first["loc"] else "thresholds"
            raise ConfigurationError(setting, overrides.get(setting), first["msg"]) from e
    return config


def create_decision_engine(
    model_spec: str | Path,
    time_threshold: float | None = None,
    distance_threshold: float | None = None,
    max_workers: int | None = None,
) -> CollisionAvoidanceEngine:
    """Convenience function to create an engine from a model reference"""
    model = resolve_model(model_spec)
    config = create_decision_config(
        time_threshold=time_threshold, distance_threshold=distance_threshold
    )
    return CollisionAvoidanceEngine(model, config, max_workers=max_workers)
