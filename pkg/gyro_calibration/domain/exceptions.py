"""Excepciones de la herramienta de calibración.

La jerarquía se divide en dos ramas que la CLI traduce a códigos de salida:
errores de entrada/configuración (2) y fallos numéricos o geométricos (3).
"""
from __future__ import annotations


class GyroCalibrationError(Exception):
    """Excepción base de la herramienta."""


# =============================================================================
# ERRORES DE ENTRADA (código de salida 2)
# =============================================================================


class CalibrationInputError(GyroCalibrationError):
    """Datos o configuración inválidos."""


class NonFiniteVectorError(CalibrationInputError, ValueError):
    """Un vector contiene NaN/Inf o no tiene 3 componentes."""


class EmptySeriesError(CalibrationInputError):
    """Se pidió un estadístico sobre una serie vacía."""


class TooFewPosesError(CalibrationInputError):
    """Hay menos de tres poses estáticas."""


class TooFewPointsError(CalibrationInputError):
    """Hay menos de dos puntos de velocidad calibrados."""


class MalformedRowError(CalibrationInputError):
    """Fila de CSV que no tiene 7 columnas numéricas."""

    def __init__(self, line: int, detail: str = "") -> None:
        self.line = line
        message = f"Fila mal formada en la línea {line}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class NonMonotonicTimeError(CalibrationInputError):
    """El tiempo no es estrictamente creciente en el archivo."""

    def __init__(self, line: int) -> None:
        self.line = line
        super().__init__(f"Tiempo no creciente en la línea {line}")


class ManifestError(CalibrationInputError):
    """Manifiesto de sesión inválido."""


class ScenarioConfigError(CalibrationInputError):
    """Campo inválido en un archivo de escenario o de barrido."""

    def __init__(self, field: str, detail: str) -> None:
        self.field = field
        super().__init__(f"Campo '{field}': {detail}")


class NoRotationFoundError(CalibrationInputError):
    """La segmentación no encontró ningún tramo de rotación constante."""


class TooFewStaticSegmentsError(CalibrationInputError):
    """La segmentación no encontró bias + tres poses estáticas."""


# =============================================================================
# ERRORES NUMÉRICOS Y GEOMÉTRICOS (código de salida 3)
# =============================================================================


class CalibrationNumericError(GyroCalibrationError):
    """Fallo numérico o geométrico del problema de calibración."""


class ZeroAxisError(CalibrationNumericError):
    """Eje de rotación de norma nula."""


class NonUnitQuaternionError(CalibrationNumericError):
    """Cuaternión que no es unitario."""


class SingularScaleError(CalibrationNumericError):
    """Factor de escala nulo: el modelo no es invertible."""


class NotStaticError(CalibrationNumericError):
    """Un segmento que debía estar en reposo presenta movimiento."""


class DegeneratePosesError(CalibrationNumericError):
    """Las poses del acelerómetro no determinan el modelo."""


class SingularSystemError(CalibrationNumericError):
    """El sistema de mínimos cuadrados está mal condicionado."""


class ZeroRateError(CalibrationNumericError):
    """La velocidad reconstruida es nula y no puede normalizarse."""


class GeometryDegenerateError(CalibrationNumericError):
    """El eje de giro es casi paralelo o casi perpendicular a la gravedad."""
