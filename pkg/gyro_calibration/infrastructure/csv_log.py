"""Lectura y escritura de logs IMU en CSV ``t,ax,ay,az,gx,gy,gz`` (s, g, °/s)."""
from __future__ import annotations

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from gyro_calibration.domain.entities import ImuSegment
from gyro_calibration.domain.exceptions import CalibrationInputError, MalformedRowError, NonMonotonicTimeError

logger = logging.getLogger(__name__)

COLUMNS = ["t", "ax", "ay", "az", "gx", "gy", "gz"]
_MAX_FIELDS = 16
_LINE_PATTERN = re.compile(r"line (\d+)")


def _read_raw(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path,
            header=None,
            names=range(_MAX_FIELDS),
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
        )
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        raise MalformedRowError(int(match.group(1)) if match else 0, "demasiadas columnas") from e
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=range(_MAX_FIELDS))


def _is_number(text: object) -> bool:
    try:
        float(str(text))
    except ValueError:
        return False
    return True


def parse_csv(path: str | Path, unit_scale: tuple[float, float] = (1.0, 1.0)) -> ImuSegment:
    """Lee un log IMU sin pérdida numérica.

    La primera línea se trata como encabezado si su primer campo no es numérico.

    Args:
        path: Archivo CSV.
        unit_scale: Factores (acelerómetro, giróscopo) para pasar de unidades
            crudas (mg, mdps) a g y °/s.

    Returns:
        Segmento con todas las muestras en orden de archivo.

    Raises:
        CalibrationInputError: Si el archivo no existe.
        MalformedRowError: Fila sin exactamente 7 campos numéricos finitos.
        NonMonotonicTimeError: Tiempo no estrictamente creciente.
    """
    path = Path(path)
    if not path.is_file():
        raise CalibrationInputError(f"No existe el archivo de log {path}")
    raw = _read_raw(path)
    lines = np.arange(1, len(raw) + 1)

    blank = raw.apply(lambda column: column.isna() | (column == "")).all(axis=1).to_numpy()
    raw, lines = raw[~blank], lines[~blank]
    if len(raw) and not _is_number(raw.iloc[0, 0]):
        raw, lines = raw.iloc[1:], lines[1:]

    field_count = (raw.notna() & (raw != "")).sum(axis=1).to_numpy()
    wrong = np.flatnonzero(field_count != len(COLUMNS))
    if wrong.size:
        i = int(wrong[0])
        raise MalformedRowError(int(lines[i]), f"{field_count[i]} columnas en lugar de 7")

    fields = raw.iloc[:, : len(COLUMNS)].apply(lambda column: column.str.strip())
    numeric = fields.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    invalid = np.flatnonzero(~np.all(np.isfinite(numeric), axis=1))
    if invalid.size:
        raise MalformedRowError(int(lines[invalid[0]]), "valor no numérico o no finito")
    values = fields.map(float).to_numpy(dtype=np.float64).reshape(-1, len(COLUMNS))

    t = values[:, 0]
    backwards = np.flatnonzero(np.diff(t) <= 0.0)
    if backwards.size:
        raise NonMonotonicTimeError(int(lines[backwards[0] + 1]))

    accel = values[:, 1:4]
    gyro = values[:, 4:7]
    accel_scale, gyro_scale = unit_scale
    if accel_scale != 1.0:
        accel = accel * accel_scale
    if gyro_scale != 1.0:
        gyro = gyro * gyro_scale
    logger.debug("Leídas %d muestras de %s", len(t), path)
    return ImuSegment(t=t, accel=accel, gyro=gyro)


def write_csv(path: str | Path, samples: ImuSegment, float_format: str = "%.17g") -> None:
    """Escribe un log con encabezado; ``%.17g`` garantiza ida y vuelta exacta de float64."""
    path = Path(path)
    frame = pd.DataFrame(
        np.column_stack([samples.t, samples.accel, samples.gyro]).reshape(-1, len(COLUMNS)),
        columns=COLUMNS,
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=float_format)
    logger.info("Log de %d muestras escrito en %s", len(frame), path)
