"""Manifiestos de sesión: lectura, escritura y materialización en CalibrationSession."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from config import EstimatorConfig, OutputConfig
from gyro_calibration.application.estimator import check_geometry, session_geometry_angle
from gyro_calibration.application.linearity import SourcedSession
from gyro_calibration.domain.entities import (
    MIN_STATIC_POSES,
    AccelModel,
    CalibrationSession,
    ImuSegment,
    SegmentRange,
    SessionManifest,
)
from gyro_calibration.domain.exceptions import (
    CalibrationInputError,
    ManifestError,
    NotStaticError,
)
from gyro_calibration.domain.sensor_model import accel_model_from_dict
from gyro_calibration.domain.vector_math import series_stats
from gyro_calibration.infrastructure.csv_log import parse_csv

logger = logging.getLogger(__name__)


def read_json(path: str | Path, error: type[CalibrationInputError] = CalibrationInputError) -> Any:
    """Lee un JSON y traduce errores de lectura o sintaxis a ``error`` con la ubicación."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise error(f"No se puede leer {path}: {e.strerror or e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise error(f"{path}: JSON inválido en línea {e.lineno}, columna {e.colno}: {e.msg}") from e


# =============================================================================
# CODEC DEL MANIFIESTO
# =============================================================================


def _range_from_dict(data: Any, name: str, n_files: int) -> SegmentRange:
    if not isinstance(data, Mapping):
        raise ManifestError(f"'{name}' debe ser un objeto {{file, start, end}}")
    try:
        segment = SegmentRange(file=int(data["file"]), start=int(data["start"]), end=int(data["end"]))
    except KeyError as e:
        raise ManifestError(f"'{name}' no tiene el campo {e.args[0]!r}") from e
    except (TypeError, ValueError) as e:
        raise ManifestError(f"'{name}' contiene índices no enteros") from e
    if not 0 <= segment.file < n_files:
        raise ManifestError(f"'{name}' referencia el archivo {segment.file}, hay {n_files}")
    if not 0 <= segment.start < segment.end:
        raise ManifestError(f"'{name}' tiene un rango vacío o invertido [{segment.start}, {segment.end})")
    return segment


def manifest_from_dict(data: Any) -> SessionManifest:
    """Valida la estructura del manifiesto JSON.

    Raises:
        ManifestError: Campos faltantes, tipos inválidos, menos de 3 poses o velocidad no positiva.
    """
    if not isinstance(data, Mapping):
        raise ManifestError("El manifiesto debe ser un objeto JSON")
    files = data.get("files")
    if not isinstance(files, list) or not files or not all(isinstance(f, str) for f in files):
        raise ManifestError("'files' debe ser una lista no vacía de rutas")
    poses = data.get("poses")
    if not isinstance(poses, list):
        raise ManifestError("'poses' debe ser una lista de rangos")
    if len(poses) < MIN_STATIC_POSES:
        raise ManifestError(f"Se requieren al menos {MIN_STATIC_POSES} poses, hay {len(poses)}")
    try:
        speed = float(data["speed_dps"])
    except KeyError as e:
        raise ManifestError("Falta 'speed_dps'") from e
    except (TypeError, ValueError) as e:
        raise ManifestError("'speed_dps' no es numérico") from e
    if not np.isfinite(speed) or speed <= 0.0:
        raise ManifestError(f"'speed_dps' debe ser positivo, es {speed}")
    accel_model = data.get("accel_model")
    if accel_model is not None and not isinstance(accel_model, str):
        raise ManifestError("'accel_model' debe ser una ruta")

    return SessionManifest(
        files=tuple(files),
        bias=_range_from_dict(data.get("bias"), "bias", len(files)),
        poses=tuple(_range_from_dict(p, f"poses[{i}]", len(files)) for i, p in enumerate(poses)),
        rotation=_range_from_dict(data.get("rotation"), "rotation", len(files)),
        speed_dps=speed,
        accel_model=accel_model,
    )


def read_manifest(path: str | Path) -> SessionManifest:
    return manifest_from_dict(read_json(path, ManifestError))


def write_manifest(
    path: str | Path, manifest: SessionManifest, metadata: Optional[Mapping[str, Any]] = None
) -> None:
    """Escribe el manifiesto; la metadata opcional se guarda bajo la clave "metadata"."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"metadata": dict(metadata), **manifest.to_dict()} if metadata else manifest.to_dict()
    path.write_text(json.dumps(document, indent=2), encoding="utf-8")
    logger.info("Manifiesto escrito en %s", path)


def _check_overlaps(manifest: SessionManifest) -> None:
    labelled = [("bias", manifest.bias), ("rotation", manifest.rotation)]
    labelled += [(f"poses[{i}]", pose) for i, pose in enumerate(manifest.poses)]
    for file_index in {segment.file for _, segment in labelled}:
        in_file = sorted(
            ((segment.start, segment.end, name) for name, segment in labelled if segment.file == file_index)
        )
        for (_, end_a, name_a), (start_b, _, name_b) in zip(in_file, in_file[1:]):
            if start_b < end_a:
                raise ManifestError(f"Los rangos '{name_a}' y '{name_b}' se superponen")


# =============================================================================
# CARGA DE SESIONES
# =============================================================================


def read_accel_model(path: str | Path, output: OutputConfig | None = None) -> AccelModel:
    """Lee un modelo de acelerómetro ``{"scale", "bias", "unit"}`` (bias en g o m/s²)."""
    output = output or OutputConfig()
    data = read_json(path)
    if not isinstance(data, Mapping):
        raise CalibrationInputError(f"{path}: el modelo de acelerómetro debe ser un objeto JSON")
    unit = data.get("unit", "g")
    if unit not in ("g", "m/s2"):
        raise CalibrationInputError(f"{path}: unidad de bias desconocida {unit!r}")
    return accel_model_from_dict(data, output.gravity_ms2 if unit == "m/s2" else 1.0)


def _resolve(base_dir: Path, name: str) -> Path:
    path = Path(name)
    return path if path.is_absolute() else base_dir / path


def load_session(
    manifest: SessionManifest,
    base_dir: str | Path = ".",
    unit_scale: tuple[float, float] = (1.0, 1.0),
    config: EstimatorConfig | None = None,
) -> CalibrationSession:
    """Materializa la sesión descrita por un manifiesto.

    Valida en la carga los rangos, el reposo del bias y de cada pose y la
    geometría eje-gravedad, para que los errores apunten al segmento culpable.

    Args:
        manifest: Manifiesto ya validado estructuralmente.
        base_dir: Directorio contra el que se resuelven rutas relativas.
        unit_scale: Factores (acelerómetro, giróscopo) de ingesta.
        config: Umbrales del estimador.

    Raises:
        ManifestError: Rangos fuera del archivo o superpuestos.
        NotStaticError: Bias o pose con movimiento.
        GeometryDegenerateError: Eje casi paralelo o perpendicular a la gravedad.
    """
    config = config or EstimatorConfig()
    base_dir = Path(base_dir)
    if len(manifest.poses) < MIN_STATIC_POSES:
        raise ManifestError(f"Se requieren al menos {MIN_STATIC_POSES} poses, hay {len(manifest.poses)}")
    if not manifest.speed_dps > 0.0:
        raise ManifestError(f"'speed_dps' debe ser positivo, es {manifest.speed_dps}")
    _check_overlaps(manifest)

    logs = [parse_csv(_resolve(base_dir, name), unit_scale) for name in manifest.files]

    def extract(name: str, segment: SegmentRange) -> ImuSegment:
        log = logs[segment.file]
        if segment.end > len(log):
            raise ManifestError(
                f"'{name}' termina en {segment.end} pero {manifest.files[segment.file]} tiene {len(log)} muestras"
            )
        part = log[segment.start : segment.end]
        return ImuSegment(t=part.t.copy(), accel=part.accel.copy(), gyro=part.gyro.copy())

    bias = extract("bias", manifest.bias)
    poses = tuple(extract(f"poses[{i}]", pose) for i, pose in enumerate(manifest.poses))
    rotation = extract("rotation", manifest.rotation)

    gate_variance = config.static_gate_dps**2
    for name, segment in [("bias", bias), *((f"poses[{i}]", p) for i, p in enumerate(poses))]:
        variance = series_stats(segment.gyro).variance
        if np.any(variance > gate_variance):
            raise NotStaticError(f"El segmento '{name}' no está en reposo: varianza {variance}")

    session = CalibrationSession(
        bias_segment=bias,
        static_poses=poses,
        rotation_segment=rotation,
        commanded_speed=manifest.speed_dps,
    )
    accel_model = load_accel_model(manifest, base_dir)
    angle = session_geometry_angle(session, accel_model, config)
    check_geometry(angle, config)
    logger.info(
        "Sesión cargada: %d poses, rotación de %d muestras, ángulo eje-gravedad %.1f°",
        len(poses),
        len(rotation),
        angle,
    )
    return session


def load_accel_model(manifest: SessionManifest, base_dir: str | Path = ".") -> Optional[AccelModel]:
    if manifest.accel_model is None:
        return None
    return read_accel_model(_resolve(Path(base_dir), manifest.accel_model))


def load_manifest_session(
    path: str | Path,
    unit_scale: tuple[float, float] = (1.0, 1.0),
    config: EstimatorConfig | None = None,
) -> tuple[CalibrationSession, Optional[AccelModel]]:
    """Lee el manifiesto y carga la sesión y el modelo de acelerómetro que referencia."""
    path = Path(path)
    manifest = read_manifest(path)
    session = load_session(manifest, path.parent, unit_scale, config)
    return session, load_accel_model(manifest, path.parent)


class RecordedSessionSource:
    """Fuente de barrido con manifiestos grabados; varios por punto se promedian como repeticiones."""

    def __init__(
        self,
        manifests: Sequence[Sequence[str | Path]],
        unit_scale: tuple[float, float] = (1.0, 1.0),
        config: EstimatorConfig | None = None,
    ) -> None:
        self.manifests = [list(paths) for paths in manifests]
        self.unit_scale = unit_scale
        self.config = config

    def sessions_for(self, index: int, speed: float, repeats: int) -> list[SourcedSession]:
        sessions = []
        for path in self.manifests[index]:
            session, accel_model = load_manifest_session(path, self.unit_scale, self.config)
            if session.commanded_speed != speed:
                logger.warning(
                    "El manifiesto %s declara %.1f °/s pero el punto es %.1f °/s", path, session.commanded_speed, speed
                )
            sessions.append(SourcedSession(session=session, accel_model=accel_model))
        return sessions
