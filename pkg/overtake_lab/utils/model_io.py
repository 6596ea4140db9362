"""Versioned JSON document for fitted models"""

from pathlib import Path
from typing import Any

from pydantic import ValidationError

from ..core.constants import SurvivalConstants
from ..exceptions import ModelParseError, SchemaVersionError
from ..logging_config import get_logger
from ..models.survival_models import DistributionFamily, LogLogisticAft, ModelMode
from .data_io import load_json, write_json

logger = get_logger(__name__)


def model_to_document(model: LogLogisticAft) -> dict[str, Any]:
    return {
        "schema_version": SurvivalConstants.MODEL_SCHEMA_VERSION,
        "family": DistributionFamily.LOG_LOGISTIC.value,
        "mode": model.mode.value,
        "gamma": model.gamma,
        "coefficients": [{"name": c.name, "beta": c.beta} for c in model.coefficients],
        "fit_meta": model.fit_meta,
    }


def model_from_document(document: Any, source: str = "<document>") -> LogLogisticAft:
    """Validate a model document

    Raises:
        SchemaVersionError: missing or unsupported ``schema_version``
        ModelParseError: the document is not a log-logistic model
    """
    if not isinstance(document, dict):
        raise ModelParseError(source, "model document must be a JSON object")
    version = document.get("schema_version")
    if version != SurvivalConstants.MODEL_SCHEMA_VERSION:
        raise SchemaVersionError(version, SurvivalConstants.MODEL_SCHEMA_VERSION)
    family = document.get("family", DistributionFamily.LOG_LOGISTIC.value)
    if family != DistributionFamily.LOG_LOGISTIC.value:
        raise ModelParseError(source, f"unsupported distribution family '{family}'")
    try:
        return LogLogisticAft.model_validate(
            {
                "mode": document.get("mode", ModelMode.UNSCALED_SHIFT.value),
                "gamma": document.get("gamma"),
                "coefficients": document.get("coefficients"),
                "fit_meta": document.get("fit_meta"),
            }
        )
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ModelParseError(source, f"{location}: {first['msg']}") from e


def save_model(model: LogLogisticAft, path: str | Path) -> None:
    write_json(model_to_document(model), path)
    logger.debug(f"Saved model with {len(model.coefficients)} coefficients to {path}")


def load_model(path: str | Path) -> LogLogisticAft:
    """Read a model document, reporting parse errors with their location"""
    model = model_from_document(load_json(path), str(path))
    logger.debug(f"Loaded {model.mode} model from {path}")
    return model
