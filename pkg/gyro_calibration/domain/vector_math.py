"""Núcleo de vectores 3D, cuaterniones y estadísticos por eje.

Los vectores se representan como ``numpy.ndarray`` de forma (3,) y float64;
las series de muestras como arrays (n, 3). Los ángulos son radianes
internamente; la conversión a grados ocurre solo en los bordes (CLI, reportes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt

from gyro_calibration.domain.exceptions import (
    EmptySeriesError,
    NonFiniteVectorError,
    NonUnitQuaternionError,
    ZeroAxisError,
)

Vec3 = npt.NDArray[np.float64]

ZERO_AXIS_EPS = 1e-12
UNIT_QUAT_TOLERANCE = 1e-9


def as_vec3(values: Iterable[float] | npt.ArrayLike) -> Vec3:
    """Convierte a vector de 3 componentes finitas.

    Args:
        values: Secuencia de 3 números.

    Returns:
        Array float64 de forma (3,).

    Raises:
        NonFiniteVectorError: Si la forma no es (3,) o hay NaN/Inf.
    """
    vector = np.asarray(values, dtype=np.float64)
    if vector.shape != (3,):
        raise NonFiniteVectorError(f"Se esperaba un vector de 3 componentes, forma {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise NonFiniteVectorError(f"Vector con componentes no finitas: {vector}")
    return vector


def vec3(x: float, y: float, z: float) -> Vec3:
    """Construye un Vec3 a partir de sus componentes."""
    return as_vec3((x, y, z))


def dot(a: Vec3, b: Vec3) -> float:
    """Producto escalar a·b."""
    return float(a[0] * b[0] + a[1] * b[1] + a[2] * b[2])


def norm(v: Vec3) -> float:
    return math.sqrt(dot(v, v))


def unit(v: Vec3) -> Vec3:
    """Normaliza un vector.

    Raises:
        ZeroAxisError: Si la norma es menor que 1e-12.
    """
    length = norm(v)
    if length < ZERO_AXIS_EPS:
        raise ZeroAxisError(f"Vector de norma {length:.3e} no normalizable")
    return np.asarray(v, dtype=np.float64) / length


def angle_between_deg(a: Vec3, b: Vec3, acute: bool = False) -> float:
    """Ángulo entre dos vectores en grados.

    Args:
        a: Primer vector.
        b: Segundo vector.
        acute: Si es True el ángulo se pliega a [0°, 90°] (dirección sin sentido).
    """
    cosine = dot(unit(a), unit(b))
    if acute:
        cosine = abs(cosine)
    return math.degrees(math.acos(min(1.0, max(-1.0, cosine))))


@dataclass(frozen=True)
class Quat:
    """Cuaternión de Hamilton (w, x, y, z).

    Los constructores de este módulo devuelven cuaterniones unitarios con
    ``w >= 0`` para que la doble cobertura no genere representaciones distintas.
    """

    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> Quat:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis: Vec3, angle: float) -> Quat:
        """Rotación de ``angle`` radianes alrededor de ``axis``."""
        direction = unit(as_vec3(axis))
        half = 0.5 * angle
        s = math.sin(half)
        return cls(math.cos(half), direction[0] * s, direction[1] * s, direction[2] * s).normalized()

    @classmethod
    def from_two_vectors(cls, source: Vec3, target: Vec3) -> Quat:
        """Rotación mínima que lleva la dirección ``source`` a ``target``."""
        u = unit(as_vec3(source))
        v = unit(as_vec3(target))
        cosine = min(1.0, max(-1.0, dot(u, v)))
        cross = np.cross(u, v)
        if norm(cross) < ZERO_AXIS_EPS:
            if cosine > 0.0:
                return cls.identity()
            # Giro de 180° alrededor de cualquier perpendicular a u
            helper = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            return cls.from_axis_angle(np.cross(u, helper), math.pi)
        return cls.from_axis_angle(cross, math.acos(cosine))

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> Quat:
        """Normaliza y fija el signo canónico w >= 0."""
        length = self.norm()
        if length < ZERO_AXIS_EPS:
            raise NonUnitQuaternionError("Cuaternión nulo")
        sign = -1.0 if self.w < 0.0 else 1.0
        factor = sign / length
        return Quat(self.w * factor, self.x * factor, self.y * factor, self.z * factor)

    def conjugate(self) -> Quat:
        return Quat(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: Quat) -> Quat:
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def as_matrix(self) -> npt.NDArray[np.float64]:
        """Matriz de rotación 3x3 equivalente."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotate(self, v: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Aplica q v q⁻¹ a un vector (3,) o a una serie (n, 3)."""
        return quat_rotate(self, v)


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    """Cuaternión unitario de una rotación eje-ángulo.

    Raises:
        ZeroAxisError: Si la norma del eje es menor que 1e-12.
    """
    return Quat.from_axis_angle(axis, angle)


def quat_rotate(q: Quat, v: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Rota ``v`` con ``q``.

    Raises:
        NonUnitQuaternionError: Si | ‖q‖ − 1 | > 1e-9.
    """
    if abs(q.norm() - 1.0) > UNIT_QUAT_TOLERANCE:
        raise NonUnitQuaternionError(f"Norma del cuaternión {q.norm():.12f}")
    vectors = np.asarray(v, dtype=np.float64)
    return vectors @ q.as_matrix().T


def rotate_about_axis(
    v: Vec3, axis: Vec3, angles: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    """Rota un vector alrededor de ``axis`` por cada ángulo (fórmula de Rodrigues).

    Args:
        v: Vector a rotar.
        axis: Eje de rotación (se normaliza).
        angles: Ángulos en radianes, escalar o array (n,).

    Returns:
        Array (n, 3) con un vector rotado por ángulo.
    """
    k = unit(as_vec3(axis))
    vector = np.asarray(v, dtype=np.float64)
    theta = np.atleast_1d(np.asarray(angles, dtype=np.float64))[:, np.newaxis]
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    return vector * cos_t + np.cross(k, vector) * sin_t + k * dot(k, vector) * (1.0 - cos_t)


@dataclass(frozen=True)
class SeriesStats:
    """Media y varianza poblacional por eje de una serie de vectores.

    Attributes:
        mean: Media por eje.
        variance: Varianza poblacional (ddof=0) por eje.
        count: Número de muestras.
    """

    mean: Vec3
    variance: Vec3
    count: int


def series_stats(samples: Sequence[Vec3] | npt.ArrayLike) -> SeriesStats:
    """Calcula media y varianza poblacional por eje.

    Raises:
        EmptySeriesError: Si la serie no tiene muestras.
    """
    data = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
    if data.shape[0] == 0:
        raise EmptySeriesError("Serie vacía")
    mean = data.mean(axis=0)
    variance = np.maximum(data.var(axis=0), 0.0)
    return SeriesStats(mean=mean, variance=variance, count=int(data.shape[0]))
