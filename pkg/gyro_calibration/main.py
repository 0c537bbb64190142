"""Punto de entrada de la herramienta de calibración de giróscopos.

Subcomandos: ``simulate``, ``calibrate``, ``sweep`` y ``montecarlo``.
Códigos de salida: 0 éxito, 2 error de entrada o configuración, 3 fallo
numérico o geométrico.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

# Permite ejecutar este archivo directamente asegurando que el paquete esté en sys.path.
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config import AppConfig, LoggingConfig, get_config
from gyro_calibration import __version__
from gyro_calibration.application.estimator import calibrate, dot_products
from gyro_calibration.application.linearity import reconstruct_speed, run_sweep
from gyro_calibration.application.simulation.log_builder import LOG_FILE_NAME, build_log
from gyro_calibration.application.simulation.monte_carlo import RedrawPolicy, monte_carlo, noise_speed_grid
from gyro_calibration.application.simulation.scenario import PRNG_ALGORITHM, simulate_session
from gyro_calibration.domain.entities import CalibrationResult, GyroModel
from gyro_calibration.domain.exceptions import (
    CalibrationInputError,
    CalibrationNumericError,
)
from gyro_calibration.domain.sensor_model import model_to_dict
from gyro_calibration.infrastructure.csv_log import parse_csv, write_csv
from gyro_calibration.infrastructure.file_exporter import ReportExporter, RunMetadata, config_hash
from gyro_calibration.infrastructure.scenario_files import (
    parse_float_list,
    read_scenario,
    read_sweep,
    scenario_to_dict,
)
from gyro_calibration.infrastructure.segmentation import auto_segment
from gyro_calibration.infrastructure.session_loader import (
    load_manifest_session,
    load_session,
    read_accel_model,
    write_manifest,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
SEED_ENV = "GYROCAL_SEED"


def configure_logging(config: LoggingConfig, verbose: bool = False, quiet: bool = False) -> None:
    """Configura el logging raíz según la configuración y la verbosidad pedida."""
    level = "DEBUG" if verbose else "WARNING" if quiet else config.level
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if config.log_to_file and config.log_file_path:
        log_path = Path(config.log_file_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path, encoding="utf-8"))
    logging.basicConfig(level=getattr(logging, level), format=config.format, handlers=handlers)
    logging.getLogger().setLevel(getattr(logging, level))


def resolve_seed(cli_seed: Optional[int]) -> Optional[int]:
    """Semilla: ``--seed``, luego ``GYROCAL_SEED``; None deja la del archivo de escenario."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return None
    try:
        return int(env)
    except ValueError as e:
        raise CalibrationInputError(f"{SEED_ENV} no es un entero: {env!r}") from e


def _unit_scale(text: Optional[str]) -> tuple[float, float]:
    if not text:
        return 1.0, 1.0
    values = parse_float_list(text, "unit-scale")
    if len(values) != 2 or any(v <= 0.0 for v in values):
        raise CalibrationInputError("--unit-scale espera ACCEL,GYRO positivos, p.ej. 0.001,0.001")
    return values[0], values[1]


def _exporter(args: argparse.Namespace, config: AppConfig, seed: Optional[int], extra: dict[str, Any]) -> ReportExporter:
    settings = {k: v for k, v in vars(args).items() if k not in {"handler", "verbose", "quiet", "out"}}
    metadata = RunMetadata(
        tool_version=__version__,
        command=args.command,
        seed=seed,
        config_hash=config_hash({**settings, **extra}),
        prng=PRNG_ALGORITHM,
    )
    return ReportExporter(Path(args.out), metadata, config.output.float_format)


####################################################################################
# SUBCOMANDOS
####################################################################################


def cmd_simulate(args: argparse.Namespace, config: AppConfig) -> int:
    """Simula una sesión y escribe log CSV, manifiesto y verdad terreno."""
    scenario = read_scenario(args.scenario, resolve_seed(args.seed), config)
    truth = scenario_to_dict(scenario)
    exporter = _exporter(args, config, scenario.seed, {"scenario": truth})

    sim = simulate_session(scenario, config.simulation)
    log, manifest = build_log(sim)
    out = Path(args.out)
    write_csv(out / LOG_FILE_NAME, log, config.output.float_format)
    write_manifest(out / "manifest.json", manifest, exporter.metadata.to_dict())
    exporter.export_json(
        "ground_truth.json",
        {
            "scenario": truth,
            "true_speed_dps": sim.true_speed,
            "pose_angles_rad": [float(a) for a in sim.pose_angles],
            "initial_angle_rad": sim.initial_angle,
            "rotation_start_angle_rad": sim.rotation_start_angle,
        },
    )
    logger.info("Simulación escrita en %s (semilla %d)", out, scenario.seed)
    return EXIT_OK


def _result_payload(result: CalibrationResult, speed: float, config: AppConfig, accel_unit: str) -> dict[str, Any]:
    payload = result.to_dict()
    if accel_unit == "m/s2":
        payload["accel"] = {**model_to_dict(result.accel, config.output.gravity_ms2), "unit": "m/s2"}
    else:
        payload["accel"] = {**payload["accel"], "unit": "g"}
    payload["commanded_speed_dps"] = speed
    payload["reconstructed_speed_pre_dps"] = reconstruct_speed(GyroModel.identity(), result.g_mean)
    payload["reconstructed_speed_post_dps"] = reconstruct_speed(result.gyro, result.g_mean)
    return payload


def cmd_calibrate(args: argparse.Namespace, config: AppConfig) -> int:
    """Calibra a partir de un manifiesto o de un log con segmentación automática."""
    unit_scale = _unit_scale(args.unit_scale)
    if args.auto_segment:
        log_path = Path(args.auto_segment).resolve()
        log = parse_csv(log_path, unit_scale)
        manifest = auto_segment(
            log, args.speed, file_name=str(log_path), config=config.segmentation, estimator=config.estimator
        )
        session = load_session(manifest, log_path.parent, unit_scale, config.estimator)
        accel_model = None
    elif args.manifest:
        manifest = None
        session, accel_model = load_manifest_session(args.manifest, unit_scale, config.estimator)
    else:
        raise CalibrationInputError("Indique un manifiesto o --auto-segment LOG --speed S")
    if args.accel_model:
        accel_model = read_accel_model(args.accel_model, config.output)

    exporter = _exporter(args, config, None, {})
    if manifest is not None:
        write_manifest(Path(args.out) / "manifest_proposed.json", manifest, exporter.metadata.to_dict())

    result = calibrate(session, accel_model, config.estimator)
    accel_unit = args.accel_unit or config.output.accel_export_unit
    exporter.export_json(
        "calibration_result.json", _result_payload(result, session.commanded_speed, config, accel_unit)
    )
    before, after = dot_products(result)
    exporter.export_rows(
        "dot_products.csv",
        (
            {
                "pose": i,
                "before": float(b),
                "after": float(a),
                "before_rel": float(b / before.mean() - 1.0),
                "after_rel": float(a / after.mean() - 1.0),
            }
            for i, (b, a) in enumerate(zip(before, after))
        ),
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: AppConfig) -> int:
    """Barrido de velocidades con recta de linealidad por eje."""
    seed = resolve_seed(args.seed)
    sweep = read_sweep(args.sweep_config, seed, config, _unit_scale(args.unit_scale))
    exporter = _exporter(args, config, seed, {})
    report = run_sweep(sweep, config.estimator)
    exporter.export_summary("sweep_report", report.to_dict(), args.format)
    exporter.export_rows("sweep_speed.csv", report.speed_rows())
    exporter.export_rows("sweep_scale.csv", report.scale_rows())
    exporter.export_rows("sweep_estimates.csv", report.estimate_rows())
    logger.info("Barrido terminado: %d puntos, %d fallidos", len(report.points), report.failures)
    return EXIT_OK


def cmd_montecarlo(args: argparse.Namespace, config: AppConfig) -> int:
    """Campaña Monte-Carlo y, opcionalmente, rejilla ruido × velocidad."""
    scenario = read_scenario(args.scenario, resolve_seed(args.seed), config)
    if args.runs < 1:
        raise CalibrationInputError(f"--runs debe ser al menos 1, es {args.runs}")
    exporter = _exporter(args, config, scenario.seed, {"scenario": scenario_to_dict(scenario)})
    policy = RedrawPolicy(args.policy)

    summary = monte_carlo(scenario, args.runs, policy, args.workers, config.estimator, config.simulation)
    payload: dict[str, Any] = {"policy": policy.value, **summary.to_dict()}

    if args.sigmas or args.speeds:
        sigmas = parse_float_list(args.sigmas, "sigmas") if args.sigmas else (scenario.noise_sigma_gyro,)
        speeds = parse_float_list(args.speeds, "speeds") if args.speeds else (scenario.speed,)
        grid = noise_speed_grid(
            scenario, sigmas, speeds, args.runs, args.workers, config.estimator, config.simulation
        )
        payload["noise_grid"] = grid.to_dict()
        exporter.export_rows("noise_grid.csv", grid.rows())
        exporter.export_rows("noise_grid_estimates.csv", grid.estimate_rows())

    exporter.export_summary("montecarlo_summary", payload, args.format)
    exporter.export_rows("montecarlo_runs.csv", summary.run_rows())
    exporter.export_rows("montecarlo_boxplot.csv", summary.boxplot_rows())
    return EXIT_OK


####################################################################################
# PARSER
####################################################################################


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="Directorio de salida (default: out)")
    common.add_argument("--seed", type=int, default=None, help=f"Semilla; si falta se usa {SEED_ENV}")
    common.add_argument("-v", "--verbose", action="store_true", help="Logs en nivel DEBUG")
    common.add_argument("-q", "--quiet", action="store_true", help="Solo advertencias y errores")

    parser = argparse.ArgumentParser(
        prog="gyro_calibration",
        description="Calibración del factor de escala de giróscopos MEMS con un motor de velocidad conocida",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common], help="Simula una sesión de calibración")
    simulate.add_argument("scenario", help="Archivo JSON de escenario")
    simulate.set_defaults(handler=cmd_simulate)

    calibrate_parser = commands.add_parser("calibrate", parents=[common], help="Calibra a partir de logs")
    calibrate_parser.add_argument("manifest", nargs="?", help="Manifiesto JSON de la sesión")
    calibrate_parser.add_argument("--auto-segment", metavar="LOG", help="Log CSV a segmentar automáticamente")
    calibrate_parser.add_argument("--speed", type=float, default=None, help="Velocidad del motor en °/s")
    calibrate_parser.add_argument("--accel-model", help="Modelo de acelerómetro JSON ya ajustado")
    calibrate_parser.add_argument("--accel-unit", choices=["g", "m/s2"], default=None)
    calibrate_parser.add_argument("--unit-scale", metavar="ACCEL,GYRO", help="Factores de unidades crudas")
    calibrate_parser.set_defaults(handler=cmd_calibrate)

    sweep = commands.add_parser("sweep", parents=[common], help="Barrido de linealidad")
    sweep.add_argument("sweep_config", help="Archivo JSON de barrido")
    sweep.add_argument("--format", choices=["json", "csv"], default="json")
    sweep.add_argument("--unit-scale", metavar="ACCEL,GYRO", help="Factores de unidades crudas")
    sweep.set_defaults(handler=cmd_sweep)

    montecarlo = commands.add_parser("montecarlo", parents=[common], help="Campaña Monte-Carlo")
    montecarlo.add_argument("scenario", help="Archivo JSON de escenario")
    montecarlo.add_argument("--runs", type=int, default=500)
    montecarlo.add_argument("--policy", choices=[p.value for p in RedrawPolicy], default=RedrawPolicy.REDRAW.value)
    montecarlo.add_argument("--sigmas", help="Ruidos de rotación de la rejilla, p.ej. 0,30,100,200")
    montecarlo.add_argument("--speeds", help="Velocidades de la rejilla, p.ej. 5,50,200")
    montecarlo.add_argument("--workers", type=int, default=1, help="Procesos en paralelo")
    montecarlo.add_argument("--format", choices=["json", "csv"], default="json")
    montecarlo.set_defaults(handler=cmd_montecarlo)
    return parser


def main(argv: Optional[Sequence[str]] = None, config: Optional[AppConfig] = None) -> int:
    """Ejecuta la CLI y devuelve el código de salida."""
    config = config or get_config()
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(config.logging, args.verbose, args.quiet)
    try:
        return args.handler(args, config)
    except CalibrationInputError as e:
        logger.error("Error de entrada: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except CalibrationNumericError as e:
        logger.error("Fallo numérico: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
