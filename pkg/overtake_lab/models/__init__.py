"""Data models for the overtaking analysis toolkit"""

from .geometry_models import (
    CalibrationPoint,
    CalibrationSet,
    CameraModel,
    ImageObservation,
    RenderedObservation,
)
from .scenario_models import (
    AccelerationSegment,
    CollisionReport,
    GroundTruth,
    OvertakeScript,
    ScenarioSpec,
    SimOutput,
    VehicleSpec,
)
from .survival_models import (
    Coefficient,
    CovariateVector,
    DistributionFamily,
    DurationObservation,
    FitOptions,
    FitResult,
    LogLogisticAft,
    ModelMode,
)
from .trace_models import (
    BatchExtractionResult,
    Direction,
    ManeuverRecord,
    PhaseBoundaries,
    RoadGeometry,
    VehicleTrace,
)
from .traffic_models import (
    Decision,
    DecisionConfig,
    EgoState,
    GapState,
    TrafficSnapshot,
    Verdict,
)

__all__ = [
    "CovariateVector",
    "Coefficient",
    "LogLogisticAft",
    "ModelMode",
    "DistributionFamily",
    "DurationObservation",
    "FitOptions",
    "FitResult",
    "CameraModel",
    "ImageObservation",
    "CalibrationPoint",
    "CalibrationSet",
    "RenderedObservation",
    "Direction",
    "VehicleTrace",
    "RoadGeometry",
    "PhaseBoundaries",
    "ManeuverRecord",
    "BatchExtractionResult",
    "EgoState",
    "GapState",
    "TrafficSnapshot",
    "DecisionConfig",
    "Verdict",
    "Decision",
    "AccelerationSegment",
    "VehicleSpec",
    "OvertakeScript",
    "ScenarioSpec",
    "CollisionReport",
    "GroundTruth",
    "SimOutput",
]
