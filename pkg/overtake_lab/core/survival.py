"""Closed forms of the log-logistic accelerated-failure-time model

With ``a`` the log-time shift of the model (``βX`` in the unscaled mode, ``βX/γ``
in standard mode) and ``z = ln t / γ - a``:

    S(t) = expit(-z)        h(t) = expit(z) / (γ t)        f(t) = h(t) S(t)

Every function accepts a scalar or an array of times and returns the same
shape back.
"""

from collections.abc import Sequence

import numpy as np
import pandas as pd
from scipy.special import expit, logit

from ..exceptions import (
    DimensionMismatchError,
    DomainError,
    NoInteriorModeError,
    SingularityError,
    UnknownCovariateError,
)
from ..models.survival_models import Coefficient, CovariateVector, LogLogisticAft, ModelMode
from .constants import SurvivalConstants

CovariateInput = CovariateVector | Sequence[float] | np.ndarray
TimeInput = float | Sequence[float] | np.ndarray


def covariate_values(model: LogLogisticAft, x: CovariateInput) -> np.ndarray:
    """Covariate values aligned with the model's coefficient order"""
    if isinstance(x, CovariateVector):
        return x.values_for(model.covariate_names)
    values = np.asarray(x, dtype=float).ravel()
    if len(values) != model.n_covariates:
        raise DimensionMismatchError(model.n_covariates, len(values), "covariates")
    return values


def linear_predictor(model: LogLogisticAft, x: CovariateInput) -> float:
    """cons + Σ βᵢ xᵢ"""
    beta = model.beta
    values = covariate_values(model, x)
    return float(beta[0] + np.dot(beta[1:], values))


def log_time_shift(model: LogLogisticAft, bx: float) -> float:
    """Shift ``a`` of ``ln t / γ`` implied by the parameterization"""
    if model.mode is ModelMode.STANDARD_AFT:
        return bx / model.gamma
    return bx


def _times(t: TimeInput) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.isnan(times)) or np.any(times < 0):
        raise DomainError("t", t, "times must be non-negative")
    return times, scalar


def _shape(values: np.ndarray, scalar: bool) -> float | np.ndarray:
    return float(values[0]) if scalar else values


def _z(times: np.ndarray, gamma: float, a: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(times) / gamma - a


def survival_at(model: LogLogisticAft, x: CovariateInput, t: TimeInput) -> float | np.ndarray:
    """P(T > t); equals 1 at t = 0"""
    times, scalar = _times(t)
    a = log_time_shift(model, linear_predictor(model, x))
    return _shape(expit(-_z(times, model.gamma, a)), scalar)


def cdf_at(model: LogLogisticAft, x: CovariateInput, t: TimeInput) -> float | np.ndarray:
    """P(T ≤ t)"""
    survival = survival_at(model, x, t)
    return 1.0 - survival


def _rate_at_zero(gamma: float, a: float) -> float:
    """Limit of the hazard (and density) at t = 0"""
    if gamma < 1:
        return 0.0
    if gamma == 1:
        return float(np.exp(-a))
    raise SingularityError("t", 0.0, f"hazard diverges at t = 0 for gamma = {gamma} > 1")


def hazard_at(model: LogLogisticAft, x: CovariateInput, t: TimeInput) -> float | np.ndarray:
    """Instantaneous completion rate -d/dt log S(t)"""
    times, scalar = _times(t)
    a = log_time_shift(model, linear_predictor(model, x))
    result = np.empty_like(times)
    zero = times == 0
    if np.any(zero):
        result[zero] = _rate_at_zero(model.gamma, a)
    positive = ~zero
    result[positive] = expit(_z(times[positive], model.gamma, a)) / (
        model.gamma * times[positive]
    )
    return _shape(result, scalar)


def density_at(model: LogLogisticAft, x: CovariateInput, t: TimeInput) -> float | np.ndarray:
    """f(t) = h(t) S(t)"""
    hazard = hazard_at(model, x, t)
    survival = survival_at(model, x, t)
    return hazard * survival


def quantile(model: LogLogisticAft, x: CovariateInput, p: float) -> float:
    """Time at which the CDF reaches ``p``"""
    if not 0 < p < 1:
        raise DomainError("p", p, "probability level must lie in (0, 1)")
    a = log_time_shift(model, linear_predictor(model, x))
    return float(np.exp(model.gamma * (logit(p) + a)))


def median_duration(model: LogLogisticAft, x: CovariateInput) -> float:
    return quantile(model, x, 0.5)


def inflection_point(gamma: float) -> float:
    """Characteristic time (1/γ - 1)^γ / γ, defined for 0 < γ < 1"""
    if not np.isfinite(gamma) or gamma <= 0:
        raise DomainError("gamma", gamma, "scale must be positive")
    if gamma >= 1:
        raise NoInteriorModeError(gamma)
    return float((1 / gamma - 1) ** gamma / gamma)


def hazard_mode(model: LogLogisticAft, x: CovariateInput) -> float:
    """Time at which the hazard peaks, (e^a (1/γ - 1))^γ"""
    if model.gamma >= 1:
        raise NoInteriorModeError(model.gamma)
    a = log_time_shift(model, linear_predictor(model, x))
    gamma = model.gamma
    return float(np.exp(gamma * (a + np.log(1 / gamma - 1))))


def survival_profiles(
    model: LogLogisticAft,
    base_x: CovariateVector,
    covariate: str,
    levels: Sequence[float],
    t_grid: Sequence[float] | np.ndarray,
) -> pd.DataFrame:
    """S(t) curves with one covariate set to each level

    Returns a frame with a ``t_s`` column and one ``<covariate>=<level>``
    column per level.
    """
    if covariate not in SurvivalConstants.COVARIATE_NAMES:
        raise UnknownCovariateError(covariate, list(SurvivalConstants.COVARIATE_NAMES))
    times = np.asarray(t_grid, dtype=float)
    columns: dict[str, np.ndarray] = {"t_s": times}
    for level in levels:
        x = CovariateVector(**{**base_x.model_dump(), covariate: level})
        columns[f"{covariate}={level:g}"] = np.asarray(survival_at(model, x, times))
    return pd.DataFrame(columns)


def reference_model() -> LogLogisticAft:
    """Built-in coefficient table (γ = 0.253, unscaled shift)"""
    return LogLogisticAft(
        mode=ModelMode.UNSCALED_SHIFT,
        gamma=SurvivalConstants.REFERENCE_GAMMA,
        coefficients=tuple(
            Coefficient(name=name, beta=beta)
            for name, beta in SurvivalConstants.REFERENCE_COEFFICIENTS
        ),
    )
