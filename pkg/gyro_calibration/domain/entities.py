"""Entidades de dominio principales de la calibración.

Todas las estructuras de datos críticas viven aquí como dataclasses para
facilitar su uso en distintas capas. Los vectores son ``numpy.ndarray`` de
forma (3,); las series de muestras se guardan como arrays para no iterar
muestra a muestra en el estimador ni en el simulador.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, overload

import numpy as np
import numpy.typing as npt

from gyro_calibration.domain.exceptions import (
    CalibrationInputError,
    EmptySeriesError,
    NonMonotonicTimeError,
    ScenarioConfigError,
    SingularScaleError,
    TooFewPosesError,
)
from gyro_calibration.domain.vector_math import ZERO_AXIS_EPS, Quat, Vec3, as_vec3

MIN_STATIC_POSES = 3


def _validate_scale(scale: Vec3, owner: str) -> None:
    if np.any(np.abs(scale) < ZERO_AXIS_EPS):
        raise SingularScaleError(f"{owner}: factor de escala nulo {scale}")
    if np.any(scale <= 0.0):
        raise CalibrationInputError(f"{owner}: factores de escala deben ser positivos, {scale}")


@dataclass(frozen=True)
class ImuSample:
    """Lectura con marca de tiempo de acelerómetro y giróscopo.

    Attributes:
        t: Tiempo en segundos.
        accel: Fuerza específica en g.
        gyro: Velocidad angular en °/s.
    """

    t: float
    accel: Vec3
    gyro: Vec3


@dataclass(frozen=True, eq=False)
class ImuSegment:
    """Serie contigua de lecturas IMU almacenada como arrays.

    Se comporta como secuencia de ``ImuSample``: admite ``len``, iteración e
    indexado; un slice devuelve otro ``ImuSegment``.

    Attributes:
        t: Tiempos (n,) en segundos, no decrecientes.
        accel: Acelerómetro (n, 3) en g.
        gyro: Giróscopo (n, 3) en °/s.
    """

    t: npt.NDArray[np.float64]
    accel: npt.NDArray[np.float64]
    gyro: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        accel = np.asarray(self.accel, dtype=np.float64).reshape(-1, 3)
        gyro = np.asarray(self.gyro, dtype=np.float64).reshape(-1, 3)
        if not (len(t) == len(accel) == len(gyro)):
            raise CalibrationInputError(
                f"Longitudes inconsistentes: t={len(t)}, accel={len(accel)}, gyro={len(gyro)}"
            )
        backwards = np.flatnonzero(np.diff(t) < 0.0)
        if backwards.size:
            raise NonMonotonicTimeError(int(backwards[0]) + 2)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "accel", accel)
        object.__setattr__(self, "gyro", gyro)

    @classmethod
    def empty(cls) -> ImuSegment:
        return cls(t=np.empty(0), accel=np.empty((0, 3)), gyro=np.empty((0, 3)))

    def __len__(self) -> int:
        return len(self.t)

    @overload
    def __getitem__(self, index: int) -> ImuSample: ...

    @overload
    def __getitem__(self, index: slice) -> ImuSegment: ...

    def __getitem__(self, index: int | slice) -> ImuSample | ImuSegment:
        if isinstance(index, slice):
            return ImuSegment(t=self.t[index], accel=self.accel[index], gyro=self.gyro[index])
        return ImuSample(t=float(self.t[index]), accel=self.accel[index].copy(), gyro=self.gyro[index].copy())

    def __iter__(self) -> Iterator[ImuSample]:
        for i in range(len(self)):
            yield self[i]

    def with_gyro(self, gyro: npt.ArrayLike) -> ImuSegment:
        """Copia del segmento con otras lecturas de giróscopo."""
        return ImuSegment(t=self.t, accel=self.accel, gyro=np.asarray(gyro, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class GyroModel:
    """Modelo de 6 parámetros del giróscopo: G_r = K·G_m + b con K diagonal.

    Attributes:
        scale: Diagonal de K (adimensional).
        bias: Bias aditivo b en °/s.
    """

    scale: Vec3
    bias: Vec3

    def __post_init__(self) -> None:
        scale = as_vec3(self.scale)
        _validate_scale(scale, "GyroModel")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "bias", as_vec3(self.bias))

    @classmethod
    def identity(cls) -> GyroModel:
        return cls(scale=np.ones(3), bias=np.zeros(3))


@dataclass(frozen=True, eq=False)
class AccelModel:
    """Modelo diagonal del acelerómetro: a_c = S·a_m + b.

    Attributes:
        scale: Diagonal de S (adimensional).
        bias: Bias en g.
    """

    scale: Vec3
    bias: Vec3

    def __post_init__(self) -> None:
        scale = as_vec3(self.scale)
        _validate_scale(scale, "AccelModel")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "bias", as_vec3(self.bias))

    @classmethod
    def identity(cls) -> AccelModel:
        return cls(scale=np.ones(3), bias=np.zeros(3))


@dataclass(frozen=True, eq=False)
class CalibrationSession:
    """Datos de una sesión de calibración en el motor.

    Attributes:
        bias_segment: IMU en reposo con el motor sin alimentar.
        static_poses: Segmentos en reposo en distintas orientaciones alrededor del eje.
        rotation_segment: Motor girando a velocidad constante.
        commanded_speed: Velocidad del servo n en °/s.
    """

    bias_segment: ImuSegment
    static_poses: tuple[ImuSegment, ...]
    rotation_segment: ImuSegment
    commanded_speed: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "static_poses", tuple(self.static_poses))
        if len(self.static_poses) < MIN_STATIC_POSES:
            raise TooFewPosesError(
                f"Se requieren al menos {MIN_STATIC_POSES} poses estáticas, hay {len(self.static_poses)}"
            )
        if not np.isfinite(self.commanded_speed) or self.commanded_speed <= 0.0:
            raise CalibrationInputError(f"Velocidad comandada inválida: {self.commanded_speed}")
        segments = [self.bias_segment, self.rotation_segment, *self.static_poses]
        if any(len(segment) == 0 for segment in segments):
            raise EmptySeriesError("La sesión contiene segmentos vacíos")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Matriz X y vector l del sistema X·β = l.

    Attributes:
        rows: Array (n, 3), fila i = a_c[i] ⊙ Ḡ_m.
        rhs: Array (n,), todo unos (L no es observable).
    """

    rows: npt.NDArray[np.float64]
    rhs: npt.NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True, eq=False)
class LeastSquaresSolution:
    """Solución de mínimos cuadrados lineales.

    Attributes:
        beta: Estimación β̂ (escala arbitraria).
        residual_rms: RMS de X·β̂ − l en unidades de l.
        condition_number: Número de condición de XᵀX.
    """

    beta: Vec3
    residual_rms: float
    condition_number: float


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    """Resultado de una calibración a una velocidad.

    Attributes:
        gyro: Modelo final (K = α·β̂ y bias aditivo).
        alpha: Factor de normalización con la velocidad del motor.
        beta_raw: β̂ antes de normalizar.
        residual_rms: RMS del residuo en unidades de producto escalar (g·°/s).
        condition_number: Número de condición de XᵀX.
        angle_axis_gravity: Ángulo medio eje-gravedad en grados.
        accel: Modelo de acelerómetro aplicado a las poses.
        g_mean: Media del giro sin bias en el tramo de rotación (°/s).
        pose_gravity: Gravedad calibrada media por pose (n, 3).
    """

    gyro: GyroModel
    alpha: float
    beta_raw: Vec3
    residual_rms: float
    condition_number: float
    angle_axis_gravity: float
    accel: AccelModel = field(default_factory=AccelModel.identity)
    g_mean: Vec3 = field(default_factory=lambda: np.zeros(3))
    pose_gravity: npt.NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 3)))

    def to_dict(self) -> dict[str, Any]:
        """Serialización JSON con el orden de campos fijo del reporte."""
        return {
            "scale": [float(v) for v in self.gyro.scale],
            "bias": [float(v) for v in self.gyro.bias],
            "alpha": float(self.alpha),
            "beta_raw": [float(v) for v in self.beta_raw],
            "residual_rms": float(self.residual_rms),
            "condition_number": float(self.condition_number),
            "angle_axis_gravity_deg": float(self.angle_axis_gravity),
            "accel": {
                "scale": [float(v) for v in self.accel.scale],
                "bias": [float(v) for v in self.accel.bias],
            },
            "g_mean": [float(v) for v in self.g_mean],
            "pose_gravity": [[float(v) for v in row] for row in self.pose_gravity],
        }


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Escenario de simulación de una sesión de calibración.

    Attributes:
        true_gyro: Modelo verdadero del giróscopo.
        true_accel: Modelo verdadero del acelerómetro.
        axis: Eje de rotación del motor en el marco del sensor.
        mount: Postura de instalación (sensor → mundo) en el ángulo 0 del motor.
        speed: Velocidad comandada en °/s.
        noise_sigma_gyro: Ruido gaussiano del giróscopo durante la rotación (°/s).
        noise_sigma_accel: Ruido gaussiano del acelerómetro (g).
        n_poses: Número de poses estáticas.
        samples_per_segment: Muestras por segmento estático.
        sample_rate: Frecuencia de muestreo en Hz.
        seed: Semilla de 64 bits del escenario.
        rotation_samples: Muestras del tramo de rotación.
        static_noise_sigma_gyro: Ruido del giróscopo con el motor apagado; None usa noise_sigma_gyro.
        speed_error: Error relativo máximo de la velocidad real del servo (uniforme ±).
        misalignment_deg: Desalineación fija entre triedros giróscopo/acelerómetro.
    """

    true_gyro: GyroModel
    true_accel: AccelModel
    axis: Vec3
    mount: Quat
    speed: float
    noise_sigma_gyro: float
    noise_sigma_accel: float
    n_poses: int
    samples_per_segment: int
    sample_rate: float
    seed: int
    rotation_samples: int = 2000
    static_noise_sigma_gyro: Optional[float] = None
    speed_error: float = 0.0
    misalignment_deg: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis", as_vec3(self.axis))
        checks = {
            "speed": self.speed >= 0.0,
            "noise_sigma_gyro": self.noise_sigma_gyro >= 0.0,
            "noise_sigma_accel": self.noise_sigma_accel >= 0.0,
            "static_noise_sigma_gyro": self.static_noise_sigma_gyro is None
            or self.static_noise_sigma_gyro >= 0.0,
            "n_poses": self.n_poses >= MIN_STATIC_POSES,
            "samples_per_segment": self.samples_per_segment >= 1,
            "rotation_samples": self.rotation_samples >= 1,
            "sample_rate": self.sample_rate > 0.0,
            "speed_error": 0.0 <= self.speed_error < 1.0,
        }
        for name, valid in checks.items():
            if not valid:
                raise ScenarioConfigError(name, f"valor fuera de rango: {getattr(self, name)!r}")

    @property
    def static_sigma_gyro(self) -> float:
        if self.static_noise_sigma_gyro is None:
            return self.noise_sigma_gyro
        return self.static_noise_sigma_gyro


@dataclass(frozen=True, eq=False)
class SimulatedSession:
    """Sesión simulada junto con su verdad terreno.

    Attributes:
        session: Sesión lista para el estimador.
        ground_truth: Escenario que la generó.
        pose_angles: Ángulo del motor (rad) de cada pose.
        initial_angle: Ángulo del motor durante el segmento de bias.
        rotation_start_angle: Ángulo del motor al iniciar el tramo de rotación.
        true_speed: Velocidad real del servo (incluye speed_error).
    """

    session: CalibrationSession
    ground_truth: ScenarioConfig
    pose_angles: npt.NDArray[np.float64]
    initial_angle: float
    rotation_start_angle: float
    true_speed: float


@dataclass(frozen=True)
class SegmentRange:
    """Rango [start, end) de muestras dentro de un archivo del manifiesto."""

    file: int
    start: int
    end: int

    def to_dict(self) -> dict[str, int]:
        return {"file": self.file, "start": self.start, "end": self.end}


@dataclass(frozen=True)
class SessionManifest:
    """Etiquetado de un log en segmentos de calibración.

    Attributes:
        files: Rutas de los CSV (relativas al manifiesto o absolutas).
        bias: Rango del segmento de bias.
        poses: Rangos de las poses estáticas.
        rotation: Rango del tramo de rotación.
        speed_dps: Velocidad comandada en °/s.
        accel_model: Ruta opcional a un modelo de acelerómetro ya ajustado.
    """

    files: tuple[str, ...]
    bias: SegmentRange
    poses: tuple[SegmentRange, ...]
    rotation: SegmentRange
    speed_dps: float
    accel_model: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "files": list(self.files),
            "bias": self.bias.to_dict(),
            "poses": [pose.to_dict() for pose in self.poses],
            "rotation": self.rotation.to_dict(),
            "speed_dps": self.speed_dps,
        }
        if self.accel_model is not None:
            data["accel_model"] = self.accel_model
        return data
