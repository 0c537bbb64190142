"""Archivos JSON de escenario y de barrido.

Escenario: cualquier campo de ``ScenarioConfig`` en unidades °/s, g y Hz;
``true_gyro``/``true_accel`` como ``{"scale": [..], "bias": [..]}``, ``axis``
como lista de 3, ``mount`` como cuaternión ``[w, x, y, z]`` o ``tilt_deg``.
Los campos ausentes se sortean o toman su valor por defecto.

Barrido: ``speeds`` (lista o ``{"start", "stop", "step"}``) y una fuente:
``scenario`` (objeto de escenario, con ``redraw_scale``) o ``manifests``
(una lista de rutas de manifiesto por punto).
"""
from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from config import AppConfig
from gyro_calibration.application.linearity import SimulatedSource, SweepConfig
from gyro_calibration.application.simulation.scenario import draw_scenario
from gyro_calibration.domain.entities import ScenarioConfig
from gyro_calibration.domain.exceptions import CalibrationInputError, GyroCalibrationError, ScenarioConfigError
from gyro_calibration.domain.sensor_model import accel_model_from_dict, gyro_model_from_dict, model_to_dict
from gyro_calibration.domain.vector_math import Quat, as_vec3
from gyro_calibration.infrastructure.session_loader import RecordedSessionSource, read_json

logger = logging.getLogger(__name__)


def _number(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"se esperaba un número, se recibió {value!r}")
    return float(value)


def _integer(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"se esperaba un entero, se recibió {value!r}")
    return value


def _optional_number(value: Any) -> float | None:
    return None if value is None else _number(value)


def _quat(value: Any) -> Quat:
    if not isinstance(value, list) or len(value) != 4:
        raise TypeError("se esperaba [w, x, y, z]")
    quat = Quat(*(_number(v) for v in value))
    if abs(quat.norm() - 1.0) > 1e-9:
        raise ValueError(f"el cuaternión no es unitario, norma {quat.norm():.6g}")
    return quat


_CONVERTERS: dict[str, Callable[[Any], Any]] = {
    "true_gyro": gyro_model_from_dict,
    "true_accel": accel_model_from_dict,
    "axis": as_vec3,
    "mount": _quat,
    "tilt_deg": _number,
    "speed": _number,
    "noise_sigma_gyro": _number,
    "noise_sigma_accel": _number,
    "static_noise_sigma_gyro": _optional_number,
    "speed_error": _number,
    "misalignment_deg": _number,
    "n_poses": _integer,
    "samples_per_segment": _integer,
    "rotation_samples": _integer,
    "sample_rate": _number,
    "seed": _integer,
}


def scenario_from_dict(data: Any, seed: int | None = None, config: AppConfig | None = None) -> ScenarioConfig:
    """Construye el escenario a partir del JSON.

    Args:
        data: Objeto JSON decodificado.
        seed: Semilla que prevalece sobre la del archivo.
        config: Configuración de la aplicación (rangos de sorteo).

    Raises:
        ScenarioConfigError: Con el nombre del campo inválido.
    """
    config = config or AppConfig()
    if not isinstance(data, Mapping):
        raise ScenarioConfigError("<raíz>", "el escenario debe ser un objeto JSON")
    overrides: dict[str, Any] = {}
    for name, value in data.items():
        converter = _CONVERTERS.get(name)
        if converter is None:
            raise ScenarioConfigError(name, "campo desconocido")
        try:
            overrides[name] = converter(value)
        except ScenarioConfigError:
            raise
        except (GyroCalibrationError, TypeError, ValueError, AttributeError) as e:
            raise ScenarioConfigError(name, str(e)) from e

    file_seed = overrides.pop("seed", config.default_seed)
    final_seed = file_seed if seed is None else seed
    if not 0 <= final_seed < 2**64:
        raise ScenarioConfigError("seed", f"debe estar en [0, 2^64), es {final_seed}")
    try:
        return draw_scenario(final_seed, overrides, config.simulation)
    except ScenarioConfigError:
        raise
    except GyroCalibrationError as e:
        raise ScenarioConfigError("axis", str(e)) from e


def read_scenario(path: str | Path, seed: int | None = None, config: AppConfig | None = None) -> ScenarioConfig:
    return scenario_from_dict(read_json(path), seed, config)


def _speeds(value: Any) -> tuple[float, ...]:
    if isinstance(value, Mapping):
        try:
            start, stop, step = (_number(value[k]) for k in ("start", "stop", "step"))
        except (KeyError, TypeError) as e:
            raise ScenarioConfigError("speeds", "se esperaba {start, stop, step} numéricos") from e
        if step <= 0.0:
            raise ScenarioConfigError("speeds", "el paso debe ser positivo")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(v) for v in start + step * np.arange(count))
    if isinstance(value, list):
        try:
            return tuple(_number(v) for v in value)
        except TypeError as e:
            raise ScenarioConfigError("speeds", str(e)) from e
    raise ScenarioConfigError("speeds", "se esperaba una lista o {start, stop, step}")


def sweep_from_dict(
    data: Any,
    base_dir: str | Path = ".",
    seed: int | None = None,
    config: AppConfig | None = None,
    unit_scale: tuple[float, float] = (1.0, 1.0),
) -> SweepConfig:
    """Construye la configuración de barrido a partir del JSON.

    Raises:
        ScenarioConfigError: Con el nombre del campo inválido.
    """
    config = config or AppConfig()
    if not isinstance(data, Mapping):
        raise ScenarioConfigError("<raíz>", "el barrido debe ser un objeto JSON")
    known = {"speeds", "scenario", "redraw_scale", "manifests", "low_speed_threshold_dps", "low_speed_repeats"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ScenarioConfigError(unknown[0], "campo desconocido")
    if "speeds" not in data:
        raise ScenarioConfigError("speeds", "campo obligatorio")
    speeds = _speeds(data["speeds"])

    linearity = config.linearity
    try:
        if "low_speed_threshold_dps" in data:
            linearity = dataclasses.replace(linearity, low_speed_threshold_dps=_number(data["low_speed_threshold_dps"]))
        if "low_speed_repeats" in data:
            linearity = dataclasses.replace(linearity, low_speed_repeats=_integer(data["low_speed_repeats"]))
    except TypeError as e:
        raise ScenarioConfigError("low_speed", str(e)) from e

    if "manifests" in data:
        manifests = data["manifests"]
        if not isinstance(manifests, list) or len(manifests) != len(speeds):
            raise ScenarioConfigError("manifests", "se espera una lista de rutas por velocidad")
        base = Path(base_dir)
        resolved = []
        for entry in manifests:
            paths = entry if isinstance(entry, list) else [entry]
            if not paths or not all(isinstance(p, str) for p in paths):
                raise ScenarioConfigError("manifests", "cada punto necesita al menos una ruta")
            resolved.append([p if Path(p).is_absolute() else str(base / p) for p in paths])
        source: Any = RecordedSessionSource(resolved, unit_scale, config.estimator)
        # Una repetición por manifiesto
        linearity = dataclasses.replace(linearity, low_speed_threshold_dps=0.0, low_speed_repeats=1)
    else:
        scenario = scenario_from_dict(data.get("scenario", {}), seed, config)
        redraw = data.get("redraw_scale", True)
        if not isinstance(redraw, bool):
            raise ScenarioConfigError("redraw_scale", "se esperaba true/false")
        source = SimulatedSource(scenario, redraw_scale=redraw, simulation_config=config.simulation)
    return SweepConfig(speeds=speeds, source=source, linearity=linearity)


def read_sweep(
    path: str | Path,
    seed: int | None = None,
    config: AppConfig | None = None,
    unit_scale: tuple[float, float] = (1.0, 1.0),
) -> SweepConfig:
    path = Path(path)
    return sweep_from_dict(read_json(path), path.parent, seed, config, unit_scale)


def parse_float_list(text: str, name: str) -> tuple[float, ...]:
    """Convierte "0,30,100" en una tupla de floats (argumentos de la CLI)."""
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise CalibrationInputError(f"--{name}: lista de números inválida {text!r}") from e


def scenario_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Serializa un escenario en el mismo formato que acepta ``scenario_from_dict``."""
    return {
        "true_gyro": model_to_dict(cfg.true_gyro),
        "true_accel": model_to_dict(cfg.true_accel),
        "axis": [float(v) for v in cfg.axis],
        "mount": [float(v) for v in cfg.mount.as_array()],
        "speed": float(cfg.speed),
        "noise_sigma_gyro": float(cfg.noise_sigma_gyro),
        "noise_sigma_accel": float(cfg.noise_sigma_accel),
        "static_noise_sigma_gyro": cfg.static_noise_sigma_gyro,
        "speed_error": float(cfg.speed_error),
        "misalignment_deg": float(cfg.misalignment_deg),
        "n_poses": int(cfg.n_poses),
        "samples_per_segment": int(cfg.samples_per_segment),
        "rotation_samples": int(cfg.rotation_samples),
        "sample_rate": float(cfg.sample_rate),
        "seed": int(cfg.seed),
    }
