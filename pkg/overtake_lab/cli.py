"""Command line interface for the overtaking analysis toolkit"""

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, NoReturn

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .config.settings import settings
from .core.avoidance import CollisionAvoidanceEngine
from .core.constants import AvoidanceConstants, SurvivalConstants
from .core.factory import create_decision_config, resolve_model
from .core.fitting import fit_aft, simulate_durations, synthetic_covariates
from .core.geometry import calibration_mape, reconstruct_traces
from .core.maneuver import ManeuverBatch, to_observation
from .core.simulator import add_gps_noise, default_overtake_spec, render_observations, run_scenario
from .core.survival import (
    cdf_at,
    density_at,
    hazard_at,
    median_duration,
    survival_at,
    survival_profiles,
)
from .exceptions import (
    CollisionError,
    ConfigurationError,
    DataFileError,
    ObservationDataError,
    OvertakeLabError,
)
from .logging_config import get_logger, setup_logging
from .models.scenario_models import SimOutput
from .models.survival_models import CovariateVector, FitOptions, FitResult, ModelMode
from .models.trace_models import BatchExtractionResult
from .utils.data_io import (
    dump_models,
    read_calibration,
    read_camera,
    read_observations,
    read_rendered,
    read_scenario,
    read_snapshots,
    read_traces,
    write_json,
    write_observations,
    write_records,
    write_rendered,
    write_traces,
)
from .utils.model_io import save_model

logger = get_logger(__name__)

DEFAULT_BASE_COVARIATES = "ud=6.9,pd=8.3,dab=20.3,multiple=0"


class UsageErrorParser(argparse.ArgumentParser):
    """Parser that reports usage errors with exit code 1

    Exit code 2 is reserved for an Unsafe advisory.
    """

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(AvoidanceConstants.EXIT_ERROR, f"{self.prog}: error: {message}\n")


class RunConfig(BaseModel):
    """Options shared by every subcommand"""

    model_config = ConfigDict(frozen=True)

    command: str = Field(description="Subcommand name")
    seed: int | None = Field(default=None, description="Seed for every random draw")
    log_level: str = Field(default="INFO")
    log_file: Path | None = None
    max_workers: int = Field(default=4)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        level = "DEBUG" if args.debug or args.verbose else settings.logging.level
        log_file = args.log_file or settings.logging.file
        return cls(
            command=args.command,
            seed=args.seed if args.seed is not None else settings.seed,
            log_level=level,
            log_file=log_file,
            max_workers=args.max_workers,
        )


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _covariates(text: str) -> CovariateVector:
    try:
        return CovariateVector.parse(text)
    except (ValueError, ValidationError) as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    log_group = common.add_argument_group("logging options")
    log_group.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    log_group.add_argument("--debug", action="store_true", help="Enable debug logging")
    log_group.add_argument("--log-file", type=Path, help="Write logs to file")
    run_group = common.add_argument_group("run options")
    run_group.add_argument(
        "--seed", type=int, default=None, help="Random seed (default: OVERTAKE_LAB_SEED)"
    )
    run_group.add_argument(
        "--max-workers",
        type=int,
        default=settings.max_workers,
        help=f"Maximum worker threads (default: {settings.max_workers})",
    )
    return common


def create_parser() -> argparse.ArgumentParser:
    """Create and configure argument parser"""
    parser = UsageErrorParser(
        prog="overtake-lab",
        description="Overtaking duration modelling, maneuver extraction and collision-avoidance advice",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  overtake-lab simulate --out-traces run.csv --ground-truth truth.json
  overtake-lab extract --traces run.csv --out maneuvers.json --observations obs.csv
  overtake-lab fit --data obs.csv --out model.json
  overtake-lab eval --model paper-table --covariates "ud=7,pd=8.3,dab=20.3,multiple=0" --t 10
  overtake-lab decide --snapshot snapshot.json --model model.json
        """,
    )
    common = _common_options()
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    simulate = subparsers.add_parser("simulate", parents=[common], help="Run a traffic scenario")
    simulate.add_argument("--spec", type=Path, help="Scenario JSON (default: built-in overtake)")
    simulate.add_argument("--out-traces", type=Path, required=True, help="Trace CSV to write")
    simulate.add_argument("--ground-truth", type=Path, help="Write phases and record JSON")
    noise_group = simulate.add_argument_group("noise options")
    noise_group.add_argument("--noise-pos", type=float, default=0.0, help="GPS position sigma, m")
    noise_group.add_argument("--noise-speed", type=float, default=0.0, help="GPS speed sigma, m/s")
    camera_group = simulate.add_argument_group("camera options")
    camera_group.add_argument("--camera", type=Path, help="Camera JSON used for rendering")
    camera_group.add_argument("--out-observations", type=Path, help="Rendered observation CSV")

    extract = subparsers.add_parser("extract", parents=[common], help="Extract maneuvers from traces")
    extract.add_argument("--traces", type=Path, nargs="+", required=True, help="Trace CSV file(s)")
    extract.add_argument("--out", type=Path, required=True, help="Maneuver records JSON")
    extract.add_argument("--observations", type=Path, help="Write duration observations for fit")
    extract.add_argument("--summary", type=Path, help="Write the per-variable summary CSV")
    extract.add_argument("--ego-id", default="ego", help="Ego vehicle id (default: ego)")
    extract.add_argument("--rendered", type=Path, help="Rebuild other vehicles from camera observations")
    extract.add_argument("--camera", type=Path, help="Camera JSON for --rendered")

    calibrate = subparsers.add_parser("calibrate", parents=[common], help="Camera calibration error")
    calibrate.add_argument("--calib", type=Path, required=True, help="Calibration CSV")
    calibrate.add_argument("--camera", type=Path, required=True, help="Camera JSON")

    fit = subparsers.add_parser("fit", parents=[common], help="Fit the duration model")
    fit.add_argument("--data", type=Path, required=True, help="Observation CSV")
    fit.add_argument("--out", type=Path, required=True, help="Model JSON to write")
    fit.add_argument(
        "--mode", choices=[m.value for m in ModelMode], default=ModelMode.UNSCALED_SHIFT.value
    )
    fit.add_argument("--tolerance", type=float, default=settings.fit.tolerance)
    fit.add_argument("--max-iter", type=int, default=settings.fit.max_iterations)
    fit.add_argument("--numeric-gradient", action="store_true", help="Use finite differences")

    evaluate = subparsers.add_parser("eval", parents=[common], help="Evaluate S, h, f and the median")
    evaluate.add_argument("--model", default=SurvivalConstants.REFERENCE_MODEL_NAME)
    evaluate.add_argument("--covariates", type=_covariates, required=True)
    evaluate.add_argument("--t", type=float, required=True, help="Time in seconds")

    decide = subparsers.add_parser("decide", parents=[common], help="Advise on an overtake")
    decide.add_argument("--snapshot", type=Path, required=True, help="Snapshot JSON (object or list)")
    decide.add_argument("--model", default=SurvivalConstants.REFERENCE_MODEL_NAME)
    decide.add_argument("--time-threshold", type=float, help="Seconds (default: 6.5)")
    decide.add_argument("--distance-threshold", type=float, help="Meters (default: 115)")

    synthesize = subparsers.add_parser("synthesize", parents=[common], help="Sample synthetic durations")
    synthesize.add_argument("--model", default=SurvivalConstants.REFERENCE_MODEL_NAME)
    synthesize.add_argument("--n", type=int, required=True, help="Number of observations")
    synthesize.add_argument("--out", type=Path, required=True, help="Observation CSV to write")

    profile = subparsers.add_parser("profile", parents=[common], help="Survival curves per covariate level")
    profile.add_argument("--model", default=SurvivalConstants.REFERENCE_MODEL_NAME)
    profile.add_argument("--covariate", required=True, choices=SurvivalConstants.COVARIATE_NAMES)
    profile.add_argument("--levels", type=_float_list, required=True)
    profile.add_argument("--base", type=_covariates, default=DEFAULT_BASE_COVARIATES)
    profile.add_argument("--t-max", type=float, default=30.0)
    profile.add_argument("--t-step", type=float, default=0.5)
    profile.add_argument("--out", type=Path, required=True, help="Curve CSV to write")

    return parser


def _require_inputs(*paths: Path | None) -> None:
    for path in paths:
        if path is not None and not path.is_file():
            raise DataFileError(str(path), "file not found")


def _require_outputs(*paths: Path | None) -> None:
    for path in paths:
        if path is not None and not path.parent.exists():
            raise ConfigurationError("output", str(path), "parent directory does not exist")


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2))


def run_simulate(args: argparse.Namespace, run: RunConfig) -> int:
    _require_inputs(args.spec, args.camera)
    _require_outputs(args.out_traces, args.ground_truth, args.out_observations)
    if (args.camera is None) != (args.out_observations is None):
        raise ConfigurationError("camera", str(args.camera), "--camera and --out-observations go together")
    spec = read_scenario(args.spec) if args.spec else default_overtake_spec()
    seed = run.seed if run.seed is not None else spec.seed

    try:
        output: SimOutput = run_scenario(spec)
    except CollisionError as e:
        if e.partial_output is not None:
            write_traces(e.partial_output.traces, args.out_traces)
        if args.ground_truth:
            write_json({"collision": e.report.model_dump(mode="json")}, args.ground_truth)
        raise

    traces = output.traces
    if args.noise_pos > 0 or args.noise_speed > 0:
        traces = add_gps_noise(traces, args.noise_pos, args.noise_speed, seed)
        logger.info(f"Added GPS noise (pos {args.noise_pos} m, speed {args.noise_speed} m/s, seed {seed})")
    write_traces(traces, args.out_traces)
    logger.info(f"✅ Wrote {len(traces)} traces × {len(output.t)} samples to {args.out_traces}")

    if args.ground_truth:
        truth = output.ground_truth
        write_json(
            None
            if truth is None
            else {
                "phases": truth.phases.model_dump(mode="json"),
                "record": truth.record.model_dump(mode="json"),
            },
            args.ground_truth,
        )
    if args.camera:
        observations = render_observations(output, read_camera(args.camera))
        write_rendered(observations, args.out_observations)
        logger.info(f"✅ Wrote {len(observations)} rendered observations to {args.out_observations}")
    return AvoidanceConstants.EXIT_SAFE


def print_batch_results(result: BatchExtractionResult) -> None:
    """Print formatted extraction results"""
    print("\n" + "=" * 60, file=sys.stderr)
    print("📊 EXTRACTION SUMMARY", file=sys.stderr)
    print("=" * 60, file=sys.stderr)
    print(f"Trace files processed: {result.total_processed}", file=sys.stderr)
    print(f"✅ Successful: {result.successful}", file=sys.stderr)
    print(f"❌ Failed: {result.failed}", file=sys.stderr)
    print(f"📈 Success rate: {result.success_rate:.1f}%", file=sys.stderr)
    if result.errors:
        print("\n❌ Failures:", file=sys.stderr)
        for error in result.errors:
            print(f"  - {error}", file=sys.stderr)
    print("=" * 60, file=sys.stderr)


def run_extract(args: argparse.Namespace, run: RunConfig) -> int:
    _require_inputs(*args.traces, args.rendered, args.camera)
    _require_outputs(args.out, args.observations, args.summary)
    batch = ManeuverBatch(ego_id=args.ego_id, max_workers=run.max_workers)

    if args.rendered is not None:
        if args.camera is None or len(args.traces) != 1:
            raise ConfigurationError(
                "rendered", str(args.rendered), "needs --camera and exactly one trace file"
            )
        traces = read_traces(args.traces[0])
        if args.ego_id not in traces:
            raise DataFileError(str(args.traces[0]), f"no trace for ego '{args.ego_id}'")
        ego = traces[args.ego_id]
        directions = {vid: trace.direction for vid, trace in traces.items()}
        rebuilt = reconstruct_traces(ego, read_rendered(args.rendered), read_camera(args.camera), directions)
        outcome = batch.process_traces({args.ego_id: ego, **rebuilt}, str(args.rendered))
        result = batch.collect([outcome])
    else:
        result = batch.process_files(args.traces)

    write_records(result.records, args.out)
    logger.info(f"✅ Wrote {len(result.records)} maneuver records to {args.out}")
    if args.summary and result.records:
        batch.write_summary(result.records, args.summary)
    if args.observations:
        observations = []
        for index, record in enumerate(result.records):
            try:
                observations.append(to_observation(record, index))
            except ObservationDataError as e:
                logger.info(f"Record {index} not usable for fitting: {e.message}")
        write_observations(observations, args.observations)
        logger.info(f"✅ Wrote {len(observations)} duration observations to {args.observations}")

    print_batch_results(result)
    return AvoidanceConstants.EXIT_ERROR if result.failed > 0 else AvoidanceConstants.EXIT_SAFE


def run_calibrate(args: argparse.Namespace, run: RunConfig) -> int:
    _require_inputs(args.calib, args.camera)
    calibration = read_calibration(args.calib)
    error = calibration_mape(read_camera(args.camera), calibration)
    _print_json({"mape_percent": error, "sessions": calibration.n, "readings": calibration.p})
    return AvoidanceConstants.EXIT_SAFE


def fit_table(result: FitResult) -> pd.DataFrame:
    """Coefficient table with SE, Wald z, p-value, 95% CI and exp(β)"""
    estimates = result.estimates()
    z = result.wald_z()
    p = result.p_values()
    ci = result.confidence_intervals()
    rows = [
        {
            "parameter": name,
            "estimate": estimates[name],
            "se": result.standard_errors[name],
            "z": z[name],
            "p_value": p[name],
            "ci_low": ci[name][0],
            "ci_high": ci[name][1],
            "exp_beta": float(np.exp(estimates[name])) if name != "gamma" else float("nan"),
        }
        for name in result.standard_errors
    ]
    return pd.DataFrame(rows).set_index("parameter")


def run_fit(args: argparse.Namespace, run: RunConfig) -> int:
    _require_inputs(args.data)
    _require_outputs(args.out)
    data = read_observations(args.data)
    try:
        options = FitOptions(
            tolerance=args.tolerance,
            max_iterations=args.max_iter,
            analytic_gradient=settings.fit.analytic_gradient and not args.numeric_gradient,
            mode=ModelMode(args.mode),
        )
    except ValidationError as e:
        raise ConfigurationError("fit", args.tolerance, e.errors()[0]["msg"]) from e
    result = fit_aft(data, options)
    save_model(result.model, args.out)
    print(fit_table(result).to_string(float_format=lambda v: f"{v:.6g}"))
    print(f"\nlog-likelihood {result.log_likelihood:.6f}  n={result.n_observations}  converged={result.converged}")
    logger.info(f"✅ Wrote model to {args.out}")
    return AvoidanceConstants.EXIT_SAFE


def run_eval(args: argparse.Namespace, run: RunConfig) -> int:
    model = resolve_model(args.model)
    x: CovariateVector = args.covariates
    _print_json(
        {
            "t": args.t,
            "covariates": x.model_dump(),
            "survival": survival_at(model, x, args.t),
            "cdf": cdf_at(model, x, args.t),
            "hazard": hazard_at(model, x, args.t),
            "density": density_at(model, x, args.t),
            "median": median_duration(model, x),
        }
    )
    return AvoidanceConstants.EXIT_SAFE


def run_decide(args: argparse.Namespace, run: RunConfig) -> int:
    _require_inputs(args.snapshot)
    snapshots = read_snapshots(args.snapshot)
    config = create_decision_config(
        time_threshold=args.time_threshold, distance_threshold=args.distance_threshold
    )
    engine = CollisionAvoidanceEngine(resolve_model(args.model), config, max_workers=run.max_workers)
    decisions = engine.decide_stream(snapshots)
    documents = dump_models(decisions)
    _print_json(documents[0] if len(documents) == 1 else documents)
    for decision in decisions:
        if not decision.is_safe:
            logger.warning(f"⚠️ Unsafe at t={decision.timestamp:.2f}s: {', '.join(decision.reasons)}")
    if all(decision.is_safe for decision in decisions):
        return AvoidanceConstants.EXIT_SAFE
    return AvoidanceConstants.EXIT_UNSAFE


def run_synthesize(args: argparse.Namespace, run: RunConfig) -> int:
    _require_outputs(args.out)
    if args.n <= 0:
        raise ConfigurationError("n", args.n, "must be positive")
    model = resolve_model(args.model)
    covariate_seed, duration_seed = (
        (None, None)
        if run.seed is None
        else tuple(int(s) for s in np.random.SeedSequence(run.seed).generate_state(2))
    )
    rows = synthetic_covariates(args.n, covariate_seed)
    write_observations(simulate_durations(model, rows, duration_seed), args.out)
    logger.info(f"✅ Wrote {args.n} synthetic observations to {args.out}")
    return AvoidanceConstants.EXIT_SAFE


def run_profile(args: argparse.Namespace, run: RunConfig) -> int:
    _require_outputs(args.out)
    if args.t_max <= 0 or args.t_step <= 0:
        raise ConfigurationError("t_grid", args.t_step, "t-max and t-step must be positive")
    model = resolve_model(args.model)
    grid = np.arange(0.0, args.t_max + args.t_step / 2, args.t_step)
    curves = survival_profiles(model, args.base, args.covariate, args.levels, grid)
    curves.to_csv(args.out, index=False)
    logger.info(f"✅ Wrote {len(args.levels)} survival curves to {args.out}")
    return AvoidanceConstants.EXIT_SAFE


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "simulate": run_simulate,
    "extract": run_extract,
    "calibrate": run_calibrate,
    "fit": run_fit,
    "eval": run_eval,
    "decide": run_decide,
    "synthesize": run_synthesize,
    "profile": run_profile,
}


def dispatch(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code

    0 on success, 1 on any error, 2 when ``decide`` advises against the overtake.
    """
    parser = create_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return AvoidanceConstants.EXIT_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else AvoidanceConstants.EXIT_ERROR
    if args.command is None:
        parser.print_usage(sys.stderr)
        return AvoidanceConstants.EXIT_ERROR

    try:
        run = RunConfig.from_args(args)
    except ValidationError as e:
        print(f"overtake-lab: error: {e.errors()[0]['msg']}", file=sys.stderr)
        return AvoidanceConstants.EXIT_ERROR
    setup_logging(run.log_level, str(run.log_file) if run.log_file else None)

    try:
        logger.debug(f"🚀 Running '{run.command}' (seed={run.seed})")
        return COMMANDS[run.command](args, run)
    except OvertakeLabError as e:
        logger.error(f"Application error: {e}")
        if args.debug:
            logger.exception("Full traceback:")
        return AvoidanceConstants.EXIT_ERROR
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        if args.debug or args.verbose:
            logger.exception("Full traceback:")
        return AvoidanceConstants.EXIT_ERROR


def main() -> None:
    """Main entry point for the CLI"""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
