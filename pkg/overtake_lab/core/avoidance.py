"""Collision-avoidance advisory for a rider about to overtake

A snapshot is Unsafe when any rule fires:

- the oncoming vehicle is closer than the distance threshold
- the predicted duration, with margin, does not fit in the available time
- the probability of outlasting the available time exceeds the tolerance
- the predicted duration alone exceeds the time threshold
"""

import threading
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..config.settings import settings
from ..exceptions import DomainError
from ..logging_config import get_logger
from ..models.survival_models import CovariateVector, LogLogisticAft
from ..models.traffic_models import Decision, DecisionConfig, TrafficSnapshot, Verdict
from .constants import AvoidanceConstants, ManeuverConstants
from .survival import median_duration, survival_at

logger = get_logger(__name__)


def time_to_arrival(gap: float, ego_speed: float, oncoming_speed: float) -> float | None:
    """Seconds until two vehicles closing head-on meet, None when they never do"""
    if not np.isfinite(gap) or gap < 0:
        raise DomainError("gap", gap, "gap must be finite and >= 0")
    closing = ego_speed + oncoming_speed
    if closing <= 0:
        return None
    return gap / closing


def available_time(snapshot: TrafficSnapshot) -> float | None:
    """Time budget before the oncoming vehicle arrives, None when unbounded"""
    if snapshot.oncoming is None:
        return None
    return time_to_arrival(snapshot.oncoming.gap, snapshot.ego.speed, snapshot.oncoming.speed)


def derive_covariates(
    snapshot: TrafficSnapshot, config: DecisionConfig | None = None
) -> CovariateVector:
    """Model covariates implied by the live traffic state

    pd is the current gap to the lead and ud the configured return gap.
    ``multiple`` is set when another vehicle sits within the platoon window
    ahead of the lead.
    """
    config = config or DecisionConfig()
    gaps = list(snapshot.platoon)
    if snapshot.follower_of_lead is not None:
        gaps.append(snapshot.follower_of_lead.gap)
    in_platoon = sum(1 for gap in gaps if gap <= config.platoon_window)
    return CovariateVector(
        ud=config.target_return_gap,
        pd=snapshot.lead.gap,
        dab=(snapshot.ego.speed - snapshot.lead.speed) * ManeuverConstants.MS_TO_KMH,
        multiple=int(in_platoon > 0),
    )


def predicted_duration(model: LogLogisticAft, x: CovariateVector) -> float:
    return median_duration(model, x)


def overrun_risk(model: LogLogisticAft, x: CovariateVector, t_avail: float | None) -> float:
    """P(T > t_avail); zero when the budget is unbounded"""
    if t_avail is None:
        return 0.0
    return float(survival_at(model, x, t_avail))


def decide(
    snapshot: TrafficSnapshot, model: LogLogisticAft, config: DecisionConfig | None = None
) -> Decision:
    """Evaluate every rule and report all that fired"""
    config = config or DecisionConfig()
    x = derive_covariates(snapshot, config)
    t_pred = predicted_duration(model, x)
    t_avail = available_time(snapshot)
    risk = overrun_risk(model, x, t_avail)

    reasons = []
    if snapshot.oncoming is not None and snapshot.oncoming.gap < config.distance_threshold:
        reasons.append(AvoidanceConstants.RULE_DISTANCE)
    if t_avail is not None and t_pred * config.time_margin > t_avail:
        reasons.append(AvoidanceConstants.RULE_TIME_BUDGET)
    if risk > config.risk_tolerance:
        reasons.append(AvoidanceConstants.RULE_OVERRUN_RISK)
    if t_pred > config.time_threshold:
        reasons.append(AvoidanceConstants.RULE_DURATION)

    decision = Decision(
        verdict=Verdict.UNSAFE if reasons else Verdict.SAFE,
        reasons=reasons,
        t_pred=t_pred,
        t_avail=t_avail,
        risk=risk,
        timestamp=snapshot.timestamp,
        covariates=x,
    )
    logger.debug(
        f"t={snapshot.timestamp:.2f}s t_pred={t_pred:.3f}s t_avail={t_avail} "
        f"risk={risk:.3e} -> {decision.verdict}"
    )
    return decision


class CollisionAvoidanceEngine:
    """Advisory engine bound to one model and one set of thresholds"""

    def __init__(
        self,
        model: LogLogisticAft,
        config: DecisionConfig | None = None,
        max_workers: int | None = None,
    ):
        self.model = model
        self.config = config or DecisionConfig.from_settings(settings.avoidance)
        self.max_workers = max_workers or settings.max_workers
        self._lock = threading.Lock()
        self._stats = {"evaluated": 0, "safe": 0, "unsafe": 0}

    def decide(self, snapshot: TrafficSnapshot) -> Decision:
        decision = decide(snapshot, self.model, self.config)
        with self._lock:
            self._stats["evaluated"] += 1
            self._stats["safe" if decision.is_safe else "unsafe"] += 1
        return decision

    def decide_stream(self, snapshots: Sequence[TrafficSnapshot]) -> list[Decision]:
        """Evaluate snapshots concurrently, advisories ordered by timestamp"""
        ordered = sorted(snapshots, key=lambda snapshot: snapshot.timestamp)
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            decisions = list(pool.map(self.decide, ordered))
        unsafe = sum(1 for decision in decisions if not decision.is_safe)
        logger.info(f"Evaluated {len(decisions)} snapshots: {unsafe} unsafe")
        return decisions

    def get_statistics(self) -> dict[str, int]:
        with self._lock:
            return dict(self._stats)
