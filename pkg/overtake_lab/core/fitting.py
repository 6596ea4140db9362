"""Maximum-likelihood estimation of the log-logistic AFT model

The optimizer works on θ = (β, ln γ) so the scale stays positive without
constraints. A quasi-Newton phase (BFGS) is followed by damped Newton
polishing on a numeric Hessian; the best point seen is returned.
"""

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from ..exceptions import (
    CollinearityError,
    DegenerateDataError,
    HessianError,
    InsufficientDataError,
    ObservationDataError,
    UnknownCovariateError,
)
from ..logging_config import get_logger
from ..models.survival_models import (
    CovariateVector,
    DurationObservation,
    FitOptions,
    FitResult,
    LogLogisticAft,
    ModelMode,
)
from .constants import FitConstants, SurvivalConstants
from .survival import quantile

logger = get_logger(__name__)


def observations_from_arrays(
    durations: Sequence[float] | np.ndarray, covariate_rows: Sequence[CovariateVector]
) -> list[DurationObservation]:
    """Pair raw durations with covariates, naming the first bad index"""
    if len(durations) != len(covariate_rows):
        raise ObservationDataError(
            min(len(durations), len(covariate_rows)),
            None,
            f"{len(durations)} durations but {len(covariate_rows)} covariate rows",
        )
    observations = []
    for index, (duration, row) in enumerate(zip(durations, covariate_rows, strict=True)):
        value = float(duration)
        if not math.isfinite(value) or value <= 0:
            raise ObservationDataError(index, value, "duration must be finite and > 0")
        observations.append(DurationObservation(duration=value, covariates=row))
    return observations


def _design(
    data: Sequence[DurationObservation], names: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix (intercept first) and log durations"""
    log_t = np.empty(len(data))
    rows = np.ones((len(data), len(names) + 1))
    for index, observation in enumerate(data):
        duration = observation.duration
        if not math.isfinite(duration) or duration <= 0:
            raise ObservationDataError(index, duration, "duration must be finite and > 0")
        log_t[index] = math.log(duration)
        rows[index, 1:] = observation.covariates.values_for(tuple(names))
    return rows, log_t


class LogLikelihood:
    """Log-likelihood of exact event times as a function of θ = (β, ln γ)"""

    def __init__(self, design: np.ndarray, log_t: np.ndarray, mode: ModelMode):
        self.design = design
        # (p, n) rows make axis-1 reductions pairwise
        self.design_t = np.ascontiguousarray(design.T)
        self.log_t = log_t
        self.mode = mode

    @property
    def n_parameters(self) -> int:
        return self.design.shape[1] + 1

    def _z(self, theta: np.ndarray) -> tuple[np.ndarray, float]:
        beta, gamma = theta[:-1], math.exp(theta[-1])
        eta = self.design @ beta
        if self.mode is ModelMode.STANDARD_AFT:
            return (self.log_t - eta) / gamma, gamma
        return self.log_t / gamma - eta, gamma

    def terms(self, theta: np.ndarray) -> np.ndarray:
        """Per-observation log densities"""
        z, _ = self._z(theta)
        return -theta[-1] - self.log_t + log_expit(z) + log_expit(-z)

    def value(self, theta: np.ndarray) -> float:
        return float(np.sum(self.terms(theta)))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        """Closed-form score"""
        z, gamma = self._z(theta)
        weight = 2 * expit(z) - 1
        grad = np.empty(self.n_parameters)
        if self.mode is ModelMode.STANDARD_AFT:
            grad[:-1] = np.sum(self.design_t * (weight / gamma), axis=1)
            grad[-1] = np.sum(-1 + weight * z)
        else:
            grad[:-1] = np.sum(self.design_t * weight, axis=1)
            grad[-1] = np.sum(-1 + weight * self.log_t / gamma)
        return grad

    def numeric_gradient(self, theta: np.ndarray) -> np.ndarray:
        """Central differences with a relative step"""
        grad = np.empty(self.n_parameters)
        for i in range(self.n_parameters):
            step = FitConstants.GRADIENT_RELATIVE_STEP * max(abs(theta[i]), 1.0)
            forward, backward = theta.copy(), theta.copy()
            forward[i] += step
            backward[i] -= step
            grad[i] = (self.value(forward) - self.value(backward)) / (2 * step)
        return grad

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        """Symmetric-difference Hessian of the log-likelihood"""
        k = self.n_parameters
        steps = FitConstants.HESSIAN_RELATIVE_STEP * np.maximum(np.abs(theta), 1.0)
        center = self.value(theta)
        hess = np.empty((k, k))
        for i in range(k):
            ei = np.zeros(k)
            ei[i] = steps[i]
            hess[i, i] = (
                self.value(theta + ei) - 2 * center + self.value(theta - ei)
            ) / steps[i] ** 2
            for j in range(i):
                ej = np.zeros(k)
                ej[j] = steps[j]
                hess[i, j] = hess[j, i] = (
                    self.value(theta + ei + ej)
                    - self.value(theta + ei - ej)
                    - self.value(theta - ei + ej)
                    + self.value(theta - ei - ej)
                ) / (4 * steps[i] * steps[j])
        return hess

    def gradient_hessian(self, theta: np.ndarray, analytic: bool) -> np.ndarray:
        """Hessian from central differences of the gradient"""
        if not analytic:
            return self.hessian(theta)
        k = self.n_parameters
        hess = np.empty((k, k))
        for i in range(k):
            step = FitConstants.HESSIAN_RELATIVE_STEP * max(abs(theta[i]), 1.0)
            forward, backward = theta.copy(), theta.copy()
            forward[i] += step
            backward[i] -= step
            hess[:, i] = (self.gradient(forward) - self.gradient(backward)) / (2 * step)
        return (hess + hess.T) / 2


def _theta(model: LogLogisticAft) -> np.ndarray:
    return np.append(model.beta, math.log(model.gamma))


def _model_from_theta(
    theta: np.ndarray, names: Sequence[str], mode: ModelMode
) -> LogLogisticAft:
    return LogLogisticAft.from_beta(theta[:-1], math.exp(theta[-1]), names=list(names), mode=mode)


def log_likelihood(
    model: LogLogisticAft, data: Sequence[DurationObservation], max_workers: int = 1
) -> float:
    """Σ ln f(tᵢ | xᵢ) over the observations

    With ``max_workers > 1`` the observations are split into chunks evaluated
    in a thread pool; the partial sums are combined with ``math.fsum``.
    """
    if not data:
        return 0.0
    design, log_t = _design(data, model.covariate_names)
    objective = LogLikelihood(design, log_t, model.mode)
    theta = _theta(model)
    if max_workers <= 1 or len(data) < 2 * max_workers:
        return objective.value(theta)

    chunks = np.array_split(np.arange(len(data)), max_workers)

    def partial(indices: np.ndarray) -> float:
        return LogLikelihood(design[indices], log_t[indices], model.mode).value(theta)

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        partials = list(executor.map(partial, chunks))
    return math.fsum(partials)


def _check_data(
    data: Sequence[DurationObservation], design: np.ndarray, names: Sequence[str]
) -> None:
    required = design.shape[1] + 1 + FitConstants.MIN_EXTRA_OBSERVATIONS
    if len(data) < required:
        raise InsufficientDataError(len(data), required)
    rank = int(np.linalg.matrix_rank(design))
    if rank < design.shape[1]:
        raise CollinearityError(rank, [SurvivalConstants.INTERCEPT_NAME, *names])


def initial_estimate(
    design: np.ndarray, log_t: np.ndarray, mode: ModelMode
) -> np.ndarray:
    """Least-squares warm start of ln t on X, scale from the residual spread"""
    coef, *_ = np.linalg.lstsq(design, log_t, rcond=None)
    residuals = log_t - design @ coef
    gamma = max(float(np.std(residuals)) * math.sqrt(3) / math.pi, 1e-3)
    beta = coef / gamma if mode is ModelMode.UNSCALED_SHIFT else coef
    return np.append(beta, math.log(gamma))


def _newton_polish(
    objective: LogLikelihood,
    theta: np.ndarray,
    gradient_fn: Callable[[np.ndarray], np.ndarray],
    tolerance: float,
    max_steps: int,
    analytic: bool,
) -> tuple[np.ndarray, int]:
    """Damped Newton steps while they keep shrinking the score"""
    value = objective.value(theta)
    grad = gradient_fn(theta)
    steps = 0
    while steps < max_steps:
        norm = float(np.max(np.abs(grad)))
        hess = objective.gradient_hessian(theta, analytic)
        try:
            direction = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(direction)):
            break
        accepted = False
        scale = 1.0
        for _ in range(10):
            candidate = theta + scale * direction
            candidate_value = objective.value(candidate)
            if np.isfinite(candidate_value) and candidate_value >= value - 1e-12 * abs(value):
                candidate_grad = gradient_fn(candidate)
                if float(np.max(np.abs(candidate_grad))) < norm:
                    accepted = True
                    break
            scale /= 2
        if not accepted:
            break
        theta, value, grad = candidate, candidate_value, candidate_grad
        steps += 1
        logger.debug(f"Newton step {steps}: |grad| = {np.max(np.abs(grad)):.3e}")
        if float(np.max(np.abs(grad))) < tolerance * 1e-3:
            break
    return theta, steps


def standard_errors(
    model: LogLogisticAft, data: Sequence[DurationObservation]
) -> tuple[dict[str, float], np.ndarray]:
    """SEs from the inverse observed information at ``model``

    Returns the per-coefficient SEs plus ``gamma`` (delta method from
    ln γ) and the covariance matrix over (β, ln γ).
    """
    design, log_t = _design(data, model.covariate_names)
    objective = LogLikelihood(design, log_t, model.mode)
    information = -objective.hessian(_theta(model))
    information = (information + information.T) / 2
    if not np.all(np.isfinite(information)):
        raise HessianError("non-finite entries")
    try:
        np.linalg.cholesky(information)
    except np.linalg.LinAlgError as e:
        raise HessianError(str(e)) from e
    covariance = np.linalg.inv(information)
    variances = np.diag(covariance)
    if np.any(variances <= 0):
        raise HessianError("non-positive variance on the diagonal")
    ses = np.sqrt(variances)
    result = {c.name: float(se) for c, se in zip(model.coefficients, ses[:-1], strict=True)}
    result["gamma"] = float(model.gamma * ses[-1])
    return result, covariance


def fit_aft(
    data: Sequence[DurationObservation],
    options: FitOptions | None = None,
    names: Sequence[str] | None = None,
) -> FitResult:
    """Maximize the log-likelihood over (β, ln γ)

    ``names`` selects the covariates, all four by default. The result is
    flagged ``converged`` only when the score max-norm is below the
    tolerance; running out of iterations yields ``converged=False``.
    """
    options = options or FitOptions()
    names = tuple(names) if names is not None else SurvivalConstants.COVARIATE_NAMES
    mode = options.initial.mode if options.initial is not None else options.mode
    if options.initial is not None:
        names = options.initial.covariate_names

    design, log_t = _design(data, names)
    _check_data(data, design, names)
    if float(np.ptp(log_t)) == 0.0:
        raise DegenerateDataError("all durations are identical, scale collapses to 0")

    objective = LogLikelihood(design, log_t, mode)
    gradient_fn = objective.gradient if options.analytic_gradient else objective.numeric_gradient

    start = initial_estimate(design, log_t, mode)
    candidates = [start]
    if options.initial is not None:
        candidates.append(_theta(options.initial))
    best_start = max(candidates, key=objective.value)
    logger.debug(f"Starting point {best_start} (ll = {objective.value(best_start):.6f})")

    def negative(theta: np.ndarray):
        if options.analytic_gradient:
            return -objective.value(theta), -objective.gradient(theta)
        return -objective.value(theta)

    with np.errstate(over="ignore", invalid="ignore"):
        solution = minimize(
            negative,
            best_start,
            method="BFGS",
            jac=True if options.analytic_gradient else None,
            options={"gtol": options.tolerance, "maxiter": options.max_iterations},
        )
    theta = solution.x if np.all(np.isfinite(solution.x)) else best_start
    iterations = int(solution.nit)

    remaining = min(FitConstants.NEWTON_POLISH_STEPS, options.max_iterations - iterations)
    if remaining > 0:
        theta, polish_steps = _newton_polish(
            objective, theta, gradient_fn, options.tolerance, remaining, options.analytic_gradient
        )
        iterations += polish_steps

    for candidate in candidates:
        if objective.value(candidate) > objective.value(theta):
            theta = candidate

    value = objective.value(theta)
    gamma = math.exp(theta[-1])
    if not math.isfinite(value) or gamma < FitConstants.GAMMA_FLOOR:
        raise DegenerateDataError("likelihood is unbounded as the scale shrinks", gamma=gamma)

    grad_norm = float(np.max(np.abs(gradient_fn(theta))))
    converged = grad_norm < options.tolerance
    model = _model_from_theta(theta, names, mode)

    try:
        ses, covariance = standard_errors(model, data)
        covariance_rows = covariance.tolist()
    except HessianError:
        if converged:
            raise
        ses = {c.name: float("nan") for c in model.coefficients}
        ses["gamma"] = float("nan")
        covariance_rows = []

    if converged:
        logger.info(
            f"Fit converged after {iterations} iterations: ll = {value:.6f}, "
            f"gamma = {gamma:.6f}"
        )
    else:
        logger.warning(
            f"Fit did not converge after {iterations} iterations "
            f"(|grad| = {grad_norm:.3e} >= {options.tolerance:.1e})"
        )

    result = FitResult(
        model=model,
        standard_errors=ses,
        log_likelihood=value,
        n_observations=len(data),
        converged=converged,
        iterations=iterations,
        gradient_max_norm=grad_norm,
        covariance=covariance_rows,
    )
    return result.model_copy(
        update={"model": model.model_copy(update={"fit_meta": result.to_fit_meta()})}
    )


def covariate_effect_percent(model: LogLogisticAft, name: str) -> float:
    """Percent change in survival time per unit increase of a covariate"""
    if name not in model.covariate_names:
        raise UnknownCovariateError(name, list(model.covariate_names))
    return (math.exp(model.coefficient(name)) - 1) * 100


def average_effect_percent(model: LogLogisticAft, name: str, level: float) -> float:
    """Per-unit effect scaled by a representative covariate level"""
    return covariate_effect_percent(model, name) * level


def exp_coefficients(model: LogLogisticAft) -> dict[str, float]:
    """exp(β) for every coefficient"""
    return {c.name: math.exp(c.beta) for c in model.coefficients}


def synthetic_covariates(n: int, seed: int | None) -> list[CovariateVector]:
    """Covariate rows drawn from the observed variable ranges"""
    rng = np.random.default_rng(seed)
    ud = rng.uniform(*FitConstants.UD_RANGE, size=n)
    pd_ = rng.uniform(*FitConstants.PD_RANGE, size=n)
    dab = rng.uniform(*FitConstants.DAB_RANGE, size=n)
    multiple = rng.binomial(1, FitConstants.MULTIPLE_PROBABILITY, size=n)
    return [
        CovariateVector(ud=float(u), pd=float(p), dab=float(d), multiple=int(m))
        for u, p, d, m in zip(ud, pd_, dab, multiple, strict=True)
    ]


def simulate_durations(
    model: LogLogisticAft, covariate_rows: Sequence[CovariateVector], seed: int | None
) -> list[DurationObservation]:
    """Inverse-CDF draws tᵢ = quantile(model, xᵢ, uᵢ)"""
    rng = np.random.default_rng(seed)
    levels = rng.uniform(np.finfo(float).tiny, 1.0, size=len(covariate_rows))
    return [
        DurationObservation(duration=quantile(model, row, float(u)), covariates=row)
        for row, u in zip(covariate_rows, levels, strict=True)
    ]
