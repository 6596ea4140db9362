"""Pydantic models for the log-logistic duration model and its fits"""

import math
from enum import StrEnum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import norm

from ..core.constants import FitConstants, SurvivalConstants
from ..exceptions import DimensionMismatchError, UnknownCovariateError


class ModelMode(StrEnum):
    """How the linear predictor enters the survival function"""

    UNSCALED_SHIFT = "paper"  # S = 1 / (1 + exp(-bX) t^(1/g))
    STANDARD_AFT = "standard"  # S = 1 / (1 + (exp(-bX) t)^(1/g))


class DistributionFamily(StrEnum):
    """Duration families; only the log-logistic one is implemented"""

    EXPONENTIAL = "exponential"
    LOG_LOGISTIC = "log_logistic"
    WEIBULL = "weibull"
    GAMMA = "gamma"


class CovariateVector(BaseModel):
    """Covariates of one overtaking maneuver"""

    model_config = ConfigDict(frozen=True)

    ud: float = Field(default=0.0, description="Ultimate distance M2 in meters")
    pd: float = Field(default=0.0, description="Primary distance M1 in meters")
    dab: float = Field(
        default=0.0, description="Speed difference Bike1 - Car1 before overtaking, km/h"
    )
    multiple: int = Field(
        default=0, description="1 when more than one vehicle is overtaken"
    )

    @field_validator("ud", "pd")
    @classmethod
    def validate_distance(cls, v: float) -> float:
        """Distances are non-negative and finite"""
        if not math.isfinite(v) or v < 0:
            raise ValueError("Distance covariates must be finite and >= 0")
        return v

    @field_validator("dab")
    @classmethod
    def validate_dab(cls, v: float) -> float:
        """Speed difference may be negative but must be finite"""
        if not math.isfinite(v):
            raise ValueError("dab must be finite")
        return v

    @field_validator("multiple")
    @classmethod
    def validate_multiple(cls, v: int) -> int:
        """Indicator covariate"""
        if v not in (0, 1):
            raise ValueError("multiple must be 0 or 1")
        return v

    @classmethod
    def parse(cls, text: str) -> "CovariateVector":
        """Build from a ``"ud=7,pd=8.3,dab=20.3,multiple=0"`` string"""
        values: dict[str, Any] = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"Expected name=value, got '{part}'")
            name, raw = (item.strip() for item in part.split("=", 1))
            if name not in SurvivalConstants.COVARIATE_NAMES:
                raise ValueError(
                    f"Unknown covariate '{name}' "
                    f"(valid: {', '.join(SurvivalConstants.COVARIATE_NAMES)})"
                )
            values[name] = int(float(raw)) if name == "multiple" else float(raw)
        return cls(**values)

    def values_for(self, names: tuple[str, ...] | list[str]) -> np.ndarray:
        """Covariate values in the order of ``names``"""
        data = self.model_dump()
        missing = [name for name in names if name not in data]
        if missing:
            raise UnknownCovariateError(missing[0], list(SurvivalConstants.COVARIATE_NAMES))
        return np.array([float(data[name]) for name in names])

    def as_array(self) -> np.ndarray:
        """Values in canonical (ud, pd, dab, multiple) order"""
        return self.values_for(SurvivalConstants.COVARIATE_NAMES)


class Coefficient(BaseModel):
    """A named coefficient on the log-time scale"""

    model_config = ConfigDict(frozen=True)

    name: str = Field(description="Covariate name, 'cons' for the intercept")
    beta: float = Field(description="Coefficient value")

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        """Validate coefficient name"""
        if not v or not v.strip():
            raise ValueError("Coefficient name cannot be empty")
        return v.strip()

    @field_validator("beta")
    @classmethod
    def validate_beta(cls, v: float) -> float:
        """Validate coefficient value"""
        if not math.isfinite(v):
            raise ValueError("Coefficient must be finite")
        return v


class LogLogisticAft(BaseModel):
    """Fitted log-logistic accelerated-failure-time model"""

    model_config = ConfigDict(frozen=True)

    mode: ModelMode = Field(default=ModelMode.UNSCALED_SHIFT, description="Parameterization")
    gamma: float = Field(description="Scale (stretching capacity), > 0")
    coefficients: tuple[Coefficient, ...] = Field(
        description="Intercept first, then one coefficient per covariate"
    )
    fit_meta: dict[str, Any] | None = Field(
        default=None, description="Diagnostics of the fit that produced the model"
    )

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v: float) -> float:
        """Scale must be positive"""
        if not math.isfinite(v) or v <= 0:
            raise ValueError("gamma must be finite and > 0")
        return v

    @field_validator("coefficients")
    @classmethod
    def validate_coefficients(cls, v: tuple[Coefficient, ...]) -> tuple[Coefficient, ...]:
        """Intercept leads, names are unique"""
        if not v:
            raise ValueError("Model needs at least the intercept")
        if v[0].name != SurvivalConstants.INTERCEPT_NAME:
            raise ValueError(
                f"First coefficient must be '{SurvivalConstants.INTERCEPT_NAME}'"
            )
        names = [c.name for c in v]
        if len(set(names)) != len(names):
            raise ValueError("Coefficient names must be unique")
        return v

    @classmethod
    def from_beta(
        cls,
        beta: "list[float] | tuple[float, ...] | np.ndarray",
        gamma: float,
        names: "list[str] | tuple[str, ...] | None" = None,
        mode: ModelMode = ModelMode.UNSCALED_SHIFT,
    ) -> "LogLogisticAft":
        """Build a model from a coefficient vector (intercept first)"""
        values = [float(b) for b in beta]
        if names is None:
            names = SurvivalConstants.COVARIATE_NAMES[: len(values) - 1]
        all_names = [SurvivalConstants.INTERCEPT_NAME, *names]
        if len(all_names) != len(values):
            raise DimensionMismatchError(len(all_names), len(values), "coefficient names")
        return cls(
            mode=mode,
            gamma=gamma,
            coefficients=tuple(
                Coefficient(name=n, beta=b) for n, b in zip(all_names, values, strict=True)
            ),
        )

    @property
    def beta(self) -> np.ndarray:
        """Coefficient vector, intercept first"""
        return np.array([c.beta for c in self.coefficients])

    @property
    def covariate_names(self) -> tuple[str, ...]:
        """Names of the non-intercept coefficients in model order"""
        return tuple(c.name for c in self.coefficients[1:])

    @property
    def n_covariates(self) -> int:
        return len(self.coefficients) - 1

    def coefficient(self, name: str) -> float:
        """Look up one coefficient by name"""
        for c in self.coefficients:
            if c.name == name:
                return c.beta
        raise UnknownCovariateError(name, [c.name for c in self.coefficients])


class DurationObservation(BaseModel):
    """One maneuver's total duration with its covariates"""

    model_config = ConfigDict(frozen=True)

    duration: float = Field(description="Total overtaking duration in seconds")
    covariates: CovariateVector = Field(default_factory=CovariateVector)

    @field_validator("duration")
    @classmethod
    def validate_duration(cls, v: float) -> float:
        """Durations are exact positive event times"""
        if not math.isfinite(v) or v <= 0:
            raise ValueError("Duration must be finite and > 0")
        return v


class FitOptions(BaseModel):
    """Options for maximum-likelihood fitting"""

    model_config = ConfigDict(frozen=True)

    initial: LogLogisticAft | None = Field(
        default=None, description="Starting model; least squares when omitted"
    )
    tolerance: float = Field(default=1e-8, description="Gradient max-norm tolerance")
    max_iterations: int = Field(default=500, description="Quasi-Newton iteration cap")
    analytic_gradient: bool = Field(default=True, description="Use the closed-form score")
    mode: ModelMode = Field(default=ModelMode.UNSCALED_SHIFT)

    @field_validator("tolerance")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Tolerance must be positive")
        return v

    @field_validator("max_iterations")
    @classmethod
    def validate_iterations(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("Max iterations must be positive")
        return v


class FitResult(BaseModel):
    """Outcome of a maximum-likelihood fit"""

    model: LogLogisticAft = Field(description="Estimated model")
    standard_errors: dict[str, float] = Field(
        description="Per-coefficient SE plus 'gamma' (delta method)"
    )
    log_likelihood: float = Field(description="Log-likelihood at the returned point")
    n_observations: int = Field(description="Number of observations used")
    converged: bool = Field(description="Gradient max-norm below tolerance")
    iterations: int = Field(description="Optimizer iterations")
    gradient_max_norm: float = Field(description="Max-norm of the score at the optimum")
    covariance: list[list[float]] = Field(
        default_factory=list,
        description="Inverse observed information over (beta..., ln gamma)",
    )

    @model_validator(mode="after")
    def validate_result(self) -> "FitResult":
        """Converged fits carry positive standard errors"""
        required = len(self.model.coefficients) + 1 + FitConstants.MIN_EXTRA_OBSERVATIONS
        if self.n_observations < required:
            raise ValueError(f"n_observations must be >= {required}")
        if self.converged and any(se <= 0 for se in self.standard_errors.values()):
            raise ValueError("Converged fits must have positive standard errors")
        return self

    def estimates(self) -> dict[str, float]:
        """Point estimates keyed like ``standard_errors``"""
        values = {c.name: c.beta for c in self.model.coefficients}
        values["gamma"] = self.model.gamma
        return values

    def wald_z(self) -> dict[str, float]:
        """Wald statistics estimate / SE"""
        est = self.estimates()
        return {
            name: est[name] / se if se > 0 else float("nan")
            for name, se in self.standard_errors.items()
        }

    def p_values(self) -> dict[str, float]:
        """Two-sided normal p-values of the Wald statistics"""
        return {name: float(2 * norm.sf(abs(z))) for name, z in self.wald_z().items()}

    def confidence_intervals(self) -> dict[str, tuple[float, float]]:
        """95% intervals estimate ± 1.96·SE"""
        est = self.estimates()
        return {
            name: (est[name] - FitConstants.CI_Z * se, est[name] + FitConstants.CI_Z * se)
            for name, se in self.standard_errors.items()
        }

    def to_fit_meta(self) -> dict[str, Any]:
        """Summary stored in the model document's ``fit_meta``"""
        cis = self.confidence_intervals()
        return {
            "log_likelihood": self.log_likelihood,
            "n": self.n_observations,
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_max_norm": self.gradient_max_norm,
            "standard_errors": dict(self.standard_errors),
            "wald_z": self.wald_z(),
            "p_values": self.p_values(),
            "ci95": {name: [low, high] for name, (low, high) in cis.items()},
        }
