"""Segmentación automática de un log continuo en bias, poses y rotación.

Una muestra está quieta cuando la desviación móvil del acelerómetro y del
giróscopo es pequeña; es estática si además la magnitud del giro sin offset
no supera el umbral de reposo en toda la ventana. Una muestra rota si la
magnitud supera ese umbral y está dentro de ±10 % de su mediana móvil. Las
fronteras de cada tramo se recortan con un margen de guarda.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd

from config import EstimatorConfig, SegmentationConfig
from gyro_calibration.domain.entities import MIN_STATIC_POSES, ImuSegment, SegmentRange, SessionManifest
from gyro_calibration.domain.exceptions import (
    EmptySeriesError,
    NoRotationFoundError,
    TooFewStaticSegmentsError,
)

logger = logging.getLogger(__name__)

BoolArray = npt.NDArray[np.bool_]

STATIC = "static"
ROTATING = "rotating"
TRANSITION = "transition"


@dataclass(frozen=True)
class _Masks:
    static: BoolArray
    rotating: BoolArray
    magnitude: npt.NDArray[np.float64]
    sample_rate: float


def _window(seconds: float, sample_rate: float) -> int:
    return max(1, int(round(seconds * sample_rate)))


def _sample_rate(t: npt.NDArray[np.float64]) -> float:
    if len(t) < 2:
        raise EmptySeriesError("Se necesitan al menos 2 muestras para segmentar")
    return 1.0 / float(np.median(np.diff(t)))


def _masks(
    samples: ImuSegment,
    config: SegmentationConfig,
    estimator: EstimatorConfig,
) -> _Masks:
    rate = _sample_rate(samples.t)
    window = _window(config.window_s, rate)
    median_window = _window(config.median_window_s, rate)
    gate = estimator.static_gate_dps

    def rolling(frame: pd.DataFrame | pd.Series, size: int):
        return frame.rolling(size, center=True, min_periods=1)

    accel = pd.DataFrame(samples.accel)
    gyro = pd.DataFrame(samples.gyro)
    accel_quiet = rolling(accel, window).std(ddof=0).max(axis=1) < config.accel_quiet_g
    gyro_quiet = rolling(gyro, window).std(ddof=0).max(axis=1) < gate
    quiet = (accel_quiet & gyro_quiet).to_numpy()

    offset = np.median(samples.gyro[quiet], axis=0) if quiet.any() else np.zeros(3)
    magnitude = pd.Series(np.linalg.norm(samples.gyro - offset, axis=1))

    static = (rolling(magnitude, window).max() < gate).to_numpy() & quiet
    median = rolling(magnitude, median_window).median()
    steady = (magnitude - median).abs() <= config.rotation_tolerance * median
    rotating = ((magnitude >= gate) & steady).to_numpy()
    return _Masks(static=static, rotating=rotating, magnitude=magnitude.to_numpy(), sample_rate=rate)


def _runs(mask: BoolArray) -> list[tuple[int, int]]:
    """Tramos contiguos [start, end) donde la máscara es verdadera."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def _trimmed(runs: list[tuple[int, int]], guard: int, minimum: int) -> list[tuple[int, int]]:
    kept = []
    for start, end in runs:
        start, end = start + guard, end - guard
        if end - start >= minimum:
            kept.append((start, end))
    return kept


def label_segment(
    samples: ImuSegment,
    config: SegmentationConfig | None = None,
    estimator: EstimatorConfig | None = None,
) -> str:
    """Etiqueta dominante de un tramo: "static", "rotating" o "transition"."""
    masks = _masks(samples, config or SegmentationConfig(), estimator or EstimatorConfig())
    if masks.static.all():
        return STATIC
    if masks.rotating.mean() >= 0.9:
        return ROTATING
    return TRANSITION


def auto_segment(
    samples: ImuSegment,
    speed_dps: float | None = None,
    file_name: str = "session_log.csv",
    config: SegmentationConfig | None = None,
    estimator: EstimatorConfig | None = None,
) -> SessionManifest:
    """Propone un manifiesto para un log continuo.

    El primer tramo estático es el bias, los demás son poses y el tramo de
    rotación es el más largo. Sin ``speed_dps`` se propone la mediana de la
    magnitud del giro durante la rotación, que el operador debe revisar.

    Raises:
        NoRotationFoundError: Si ningún tramo rota de forma sostenida.
        TooFewStaticSegmentsError: Si no hay bias y tres poses.
    """
    config = config or SegmentationConfig()
    estimator = estimator or EstimatorConfig()
    masks = _masks(samples, config, estimator)
    rate = masks.sample_rate
    guard = _window(config.guard_s, rate)

    rotating = [
        run for run in _runs(masks.rotating) if run[1] - run[0] >= _window(config.min_rotation_s, rate)
    ]
    rotating = _trimmed(rotating, guard, 1)
    if not rotating:
        raise NoRotationFoundError("No hay rotación constante de al menos %.1f s" % config.min_rotation_s)
    rotation = max(rotating, key=lambda run: run[1] - run[0])

    static = _trimmed(_runs(masks.static), guard, _window(config.min_static_s, rate))
    if len(static) < MIN_STATIC_POSES + 1:
        raise TooFewStaticSegmentsError(
            f"Se encontraron {len(static)} tramos estáticos; se requieren bias + {MIN_STATIC_POSES} poses"
        )

    if speed_dps is None:
        speed_dps = float(np.median(masks.magnitude[rotation[0] : rotation[1]]))
        logger.warning("Velocidad no indicada; se propone %.3f °/s a partir del log", speed_dps)

    manifest = SessionManifest(
        files=(file_name,),
        bias=SegmentRange(0, *static[0]),
        poses=tuple(SegmentRange(0, *run) for run in static[1:]),
        rotation=SegmentRange(0, *rotation),
        speed_dps=float(speed_dps),
    )
    logger.info(
        "Segmentación: bias %s, %d poses, rotación %s (%.0f Hz)",
        static[0],
        len(static) - 1,
        rotation,
        rate,
    )
    return manifest
