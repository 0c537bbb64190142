"""Modelo de sensor G_r = K·G_m + b y su inversa para giróscopo y acelerómetro.

Las funciones aceptan un vector (3,) o una serie (n, 3): la operación es
componente a componente y numpy la difunde sobre las filas.
"""
from __future__ import annotations

from typing import Any, Mapping

import numpy as np
import numpy.typing as npt

from gyro_calibration.domain.entities import AccelModel, GyroModel
from gyro_calibration.domain.exceptions import CalibrationInputError, SingularScaleError
from gyro_calibration.domain.vector_math import ZERO_AXIS_EPS

ArrayF = npt.NDArray[np.float64]


def _check_invertible(scale: ArrayF) -> None:
    if np.any(np.abs(scale) < ZERO_AXIS_EPS):
        raise SingularScaleError(f"Factor de escala no invertible: {scale}")


def gyro_measured_to_true(model: GyroModel, g_m: npt.ArrayLike) -> ArrayF:
    """Aplica G_r = K ⊙ G_m + b."""
    return model.scale * np.asarray(g_m, dtype=np.float64) + model.bias


def gyro_true_to_measured(model: GyroModel, g_r: npt.ArrayLike) -> ArrayF:
    """Inversa del modelo: G_m = (G_r − b) / K.

    Raises:
        SingularScaleError: Si algún factor de escala es menor que 1e-12.
    """
    _check_invertible(model.scale)
    return (np.asarray(g_r, dtype=np.float64) - model.bias) / model.scale


def accel_apply(model: AccelModel, a_m: npt.ArrayLike) -> ArrayF:
    """Calibra lecturas del acelerómetro: a_c = S ⊙ a_m + b."""
    return model.scale * np.asarray(a_m, dtype=np.float64) + model.bias


def accel_true_to_measured(model: AccelModel, a_c: npt.ArrayLike) -> ArrayF:
    """Inversa del modelo del acelerómetro.

    Raises:
        SingularScaleError: Si algún factor de escala es menor que 1e-12.
    """
    _check_invertible(model.scale)
    return (np.asarray(a_c, dtype=np.float64) - model.bias) / model.scale


# =============================================================================
# SERIALIZACIÓN JSON
# =============================================================================


def model_to_dict(model: GyroModel | AccelModel, bias_factor: float = 1.0) -> dict[str, list[float]]:
    """Serializa un modelo como ``{"scale": [...], "bias": [...]}``.

    Args:
        model: Modelo a serializar.
        bias_factor: Factor de unidades del bias (p.ej. 9.81 para exportar m/s²).
    """
    return {
        "scale": [float(v) for v in model.scale],
        "bias": [float(v) * bias_factor for v in model.bias],
    }


def _vector_field(data: Mapping[str, Any], name: str) -> list[float]:
    values = data.get(name)
    if not isinstance(values, (list, tuple)) or len(values) != 3:
        raise CalibrationInputError(f"El campo '{name}' debe ser una lista de 3 números")
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError) as e:
        raise CalibrationInputError(f"El campo '{name}' contiene valores no numéricos") from e


def gyro_model_from_dict(data: Mapping[str, Any]) -> GyroModel:
    return GyroModel(scale=_vector_field(data, "scale"), bias=_vector_field(data, "bias"))


def accel_model_from_dict(data: Mapping[str, Any], bias_factor: float = 1.0) -> AccelModel:
    """Reconstruye un AccelModel; ``bias_factor`` divide el bias (m/s² → g)."""
    bias = [v / bias_factor for v in _vector_field(data, "bias")]
    return AccelModel(scale=_vector_field(data, "scale"), bias=bias)
