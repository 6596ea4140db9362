"""Shared constants across the application"""


class SurvivalConstants:
    """Constants for the log-logistic duration model"""

    # Canonical covariate order after the intercept
    COVARIATE_NAMES: tuple[str, ...] = ("ud", "pd", "dab", "multiple")
    INTERCEPT_NAME = "cons"

    # Reference coefficient table (log-time scale)
    REFERENCE_COEFFICIENTS: tuple[tuple[str, float], ...] = (
        ("cons", 2.589),
        ("ud", 0.027),
        ("pd", 0.049),
        ("dab", -0.053),
        ("multiple", 0.463),
    )
    REFERENCE_GAMMA = 0.253
    REFERENCE_MODEL_NAME = "paper-table"

    # Persisted model document
    MODEL_SCHEMA_VERSION = 1


class FitConstants:
    """Constants for maximum-likelihood estimation"""

    CI_Z = 1.96
    MIN_EXTRA_OBSERVATIONS = 2
    GAMMA_FLOOR = 1e-6
    NEWTON_POLISH_STEPS = 25
    HESSIAN_RELATIVE_STEP = 1e-4
    GRADIENT_RELATIVE_STEP = 1e-6

    # Ranges for synthetic covariate rows
    UD_RANGE = (0.0, 15.0)
    PD_RANGE = (0.0, 20.0)
    DAB_RANGE = (0.0, 40.0)
    MULTIPLE_PROBABILITY = 0.3

    OBSERVATION_COLUMNS: tuple[str, ...] = (
        "duration_s",
        "ud_m",
        "pd_m",
        "dab_kmh",
        "multiple",
    )


class GeometryConstants:
    """Constants for monocular distance recovery"""

    CALIBRATION_COLUMNS: tuple[str, ...] = (
        "session",
        "target_m",
        "y_f_px",
        "x_offset_px",
    )
    CALIBRATION_RANGE_M = (5.0, 30.0)


class ManeuverConstants:
    """Constants for trace segmentation and extraction"""

    MS_TO_KMH = 3.6
    DEFAULT_LANE_WIDTH = 4.0
    NUM_LANES = 2
    TRACE_COLUMNS: tuple[str, ...] = (
        "t_s",
        "vehicle_id",
        "direction",
        "s_m",
        "d_m",
        "v_mps",
    )
    SAVGOL_POLYORDER = 2
    # Re-centring band in units of the residual lateral noise
    NOISE_BAND = 3.0


class SimulationConstants:
    """Constants for the two-lane scenario simulator"""

    EGO_ID = "ego"
    LATERAL_STEEPNESS = 6.0
    COLLISION_LATERAL_M = 1.5
    COLLISION_LONGITUDINAL_M = 2.0
    TIME_EPSILON = 1e-9


class AvoidanceConstants:
    """Rule identifiers for the collision-avoidance engine"""

    RULE_DISTANCE = "oncoming_gap_below_distance_threshold"
    RULE_TIME_BUDGET = "predicted_duration_exceeds_available_time"
    RULE_OVERRUN_RISK = "overrun_risk_above_tolerance"
    RULE_DURATION = "predicted_duration_above_time_threshold"

    EXIT_SAFE = 0
    EXIT_ERROR = 1
    EXIT_UNSAFE = 2
