"""Custom exceptions for the overtaking analysis toolkit"""

from typing import Any


class OvertakeLabError(Exception):
    """Base exception class for all application errors"""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} (Details: {self.details})"
        return self.message


class DimensionMismatchError(OvertakeLabError):
    """Raised when a coefficient vector and a covariate vector disagree in length"""

    def __init__(self, expected: int, actual: int, context: str = "coefficients"):
        super().__init__(
            f"Dimension mismatch for {context}: expected {expected}, got {actual}",
            {"expected": expected, "actual": actual, "context": context},
        )
        self.expected = expected
        self.actual = actual


class DomainError(OvertakeLabError):
    """Raised when an argument lies outside the domain of an operation"""

    def __init__(self, parameter: str, value: Any, reason: str):
        super().__init__(
            f"Invalid value for '{parameter}': {reason}",
            {"parameter": parameter, "value": value, "reason": reason},
        )
        self.parameter = parameter
        self.value = value
        self.reason = reason


class SingularityError(DomainError):
    """Raised when a function diverges at the requested point"""


class NoInteriorModeError(DomainError):
    """Raised when the hazard has no interior maximum (gamma >= 1)"""

    def __init__(self, gamma: float):
        super().__init__(
            "gamma", gamma, "hazard is monotone for gamma >= 1, no interior mode"
        )


class HorizonError(DomainError):
    """Raised when an image row lies at or above the horizon row"""

    def __init__(self, y_f: float, y_g: float):
        super().__init__(
            "y_f",
            y_f,
            f"target row must lie below the horizon row {y_g} (distance unbounded)",
        )
        self.y_g = y_g


class ShapeMismatchError(OvertakeLabError):
    """Raised when tabular inputs do not line up"""

    def __init__(self, operation: str, expected: Any, actual: Any):
        super().__init__(
            f"Shape mismatch in '{operation}': expected {expected}, got {actual}",
            {"operation": operation, "expected": expected, "actual": actual},
        )
        self.operation = operation


class ObservationDataError(OvertakeLabError):
    """Raised when a duration observation is unusable"""

    def __init__(self, index: int, value: Any, reason: str):
        super().__init__(
            f"Observation {index} is invalid: {reason}",
            {"index": index, "value": value, "reason": reason},
        )
        self.index = index
        self.value = value


class InsufficientDataError(OvertakeLabError):
    """Raised when there are too few observations for the parameter count"""

    def __init__(self, n_observations: int, required: int):
        super().__init__(
            f"Need at least {required} observations, got {n_observations}",
            {"n_observations": n_observations, "required": required},
        )
        self.n_observations = n_observations
        self.required = required


class CollinearityError(OvertakeLabError):
    """Raised when the design matrix is rank deficient"""

    def __init__(self, rank: int, columns: list[str]):
        super().__init__(
            f"Design matrix has rank {rank} < {len(columns)}; covariates are collinear",
            {"rank": rank, "columns": columns},
        )
        self.rank = rank
        self.columns = columns


class DegenerateDataError(OvertakeLabError):
    """Raised when the likelihood is unbounded (e.g. identical durations)"""

    def __init__(self, reason: str, gamma: float | None = None):
        super().__init__(
            f"Degenerate data: {reason}", {"reason": reason, "gamma": gamma}
        )
        self.reason = reason


class HessianError(OvertakeLabError):
    """Raised when the observed information is not positive definite"""

    def __init__(self, reason: str):
        super().__init__(
            "Observed information is not positive definite; the optimum may lie on "
            f"a boundary or the problem is ill-conditioned ({reason})",
            {"reason": reason},
        )
        self.reason = reason


class UnknownCovariateError(OvertakeLabError):
    """Raised when a covariate name is not part of a model"""

    def __init__(self, name: str, valid_names: list[str]):
        super().__init__(
            f"Unknown covariate '{name}' (valid: {', '.join(valid_names)})",
            {"name": name, "valid_names": valid_names},
        )
        self.name = name
        self.valid_names = valid_names


class NoManeuverError(OvertakeLabError):
    """Raised when no overtaking maneuver can be found in a trace"""

    def __init__(self, reason: str, vehicle_id: str | None = None):
        super().__init__(
            f"No overtaking maneuver found: {reason}",
            {"reason": reason, "vehicle_id": vehicle_id},
        )
        self.reason = reason


class PhaseTraceMismatchError(OvertakeLabError):
    """Raised when phase boundaries do not fit the supplied traces"""

    def __init__(self, reason: str):
        super().__init__(
            f"Phase boundaries do not match traces: {reason}", {"reason": reason}
        )
        self.reason = reason


class SnapshotValidationError(OvertakeLabError):
    """Raised when a traffic snapshot is malformed"""

    def __init__(self, reason: str, errors: list[Any] | None = None):
        super().__init__(
            f"Invalid traffic snapshot: {reason}",
            {"reason": reason, "errors": errors or []},
        )
        self.reason = reason


class CollisionError(OvertakeLabError):
    """Raised when the simulator detects a collision between two vehicles"""

    def __init__(self, report: Any, partial_output: Any = None):
        super().__init__(
            f"Collision between '{report.vehicle_a}' and '{report.vehicle_b}' "
            f"at t={report.t:.3f}s",
            report.model_dump(),
        )
        self.report = report
        self.partial_output = partial_output


class SchemaVersionError(OvertakeLabError):
    """Raised when a persisted document has an unsupported schema version"""

    def __init__(self, found: Any, supported: int):
        super().__init__(
            f"Unsupported schema version {found!r} (supported: {supported})",
            {"found": found, "supported": supported},
        )
        self.found = found
        self.supported = supported


class ModelParseError(OvertakeLabError):
    """Raised when a persisted document cannot be parsed"""

    def __init__(
        self, source: str, reason: str, line: int | None = None, column: int | None = None
    ):
        location = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(
            f"Failed to parse {source}{location}: {reason}",
            {"source": source, "reason": reason, "line": line, "column": column},
        )
        self.source = source
        self.line = line
        self.column = column


class ConfigurationError(OvertakeLabError):
    """Raised when configuration is invalid or missing"""

    def __init__(self, setting: str, value: Any, reason: str):
        super().__init__(
            f"Invalid configuration for '{setting}': {reason}",
            {"setting": setting, "value": value, "reason": reason},
        )
        self.setting = setting
        self.value = value
        self.reason = reason


class DataFileError(OvertakeLabError):
    """Raised when a CSV or JSON input file is malformed"""

    def __init__(self, path: str, reason: str, row: int | None = None):
        location = f" (row {row})" if row is not None else ""
        super().__init__(
            f"Invalid data file {path}{location}: {reason}",
            {"path": path, "reason": reason, "row": row},
        )
        self.path = path
        self.reason = reason
        self.row = row
